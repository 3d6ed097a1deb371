use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for `w0 + sum(refs) == 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Profit-sharing weights: the self-reference weight plus one weight per
/// entry of the reference list. Always on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w0: f64,
    refs: Vec<f64>,
}

impl WeightVector {
    pub fn new(w0: f64, refs: Vec<f64>) -> Result<Self> {
        let all = std::iter::once(&w0).chain(refs.iter());
        for &w in all {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Simplex(format!("component {w} is not a finite non-negative number")));
            }
        }
        let sum = w0 + refs.iter().sum::<f64>();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Simplex(format!("components sum to {sum}, not 1")));
        }
        Ok(Self { w0, refs })
    }

    /// Weights of an NFT without references.
    pub fn self_only() -> Self {
        Self {
            w0: 1.0,
            refs: Vec::new(),
        }
    }

    /// Scales raw non-negative reference scores so they share `1 - w0`.
    ///
    /// All-zero scores split the share evenly. An empty list hands the whole
    /// mass to the self-reference.
    pub fn normalized(w0: f64, raw_refs: &[f64]) -> Result<Self> {
        if !(0.0..1.0).contains(&w0) {
            return Err(Error::Domain {
                field: "w0",
                value: w0,
                bound: "[0, 1)",
            });
        }
        if raw_refs.is_empty() {
            return Ok(Self::self_only());
        }
        if raw_refs.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Simplex(format!("raw reference scores {raw_refs:?} must be finite and >= 0")));
        }
        let share = 1.0 - w0;
        let total: f64 = raw_refs.iter().sum();
        let mut refs: Vec<f64> = if total > 0.0 {
            raw_refs.iter().map(|w| share * w / total).collect()
        } else {
            vec![share / raw_refs.len() as f64; raw_refs.len()]
        };
        // Push rounding residue onto the last entry so the sum is 1 to the ulp.
        let residue = 1.0 - (w0 + refs.iter().sum::<f64>());
        if let Some(last) = refs.last_mut() {
            *last = (*last + residue).max(0.0);
        }
        Self::new(w0, refs)
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn refs(&self) -> &[f64] {
        &self.refs
    }

    /// `w0` followed by the reference weights.
    pub fn components(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.w0).chain(self.refs.iter().copied())
    }

    pub fn len(&self) -> usize {
        1 + self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
