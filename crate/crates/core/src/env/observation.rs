use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Features per candidate row, in order:
/// `valid, price / psi_max, quality, pi_r / pi_max, w_ref1, w_ref2, age / window`.
pub const CANDIDATE_FEATURES: usize = 7;
/// Trailing publisher scalars: `pending / d_max, height / horizon`.
pub const OWN_FEATURES: usize = 2;

/// Decoded view of one candidate row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateFeatures {
    pub price: f64,
    pub quality: f64,
    pub pi_r: f64,
    pub ref_weights: [f64; 2],
    pub age: f64,
}

/// Fixed-length encoding of what one publisher sees before acting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub features: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Observation {
    pub fn len_for(candidate_size: usize) -> usize {
        candidate_size * CANDIDATE_FEATURES + OWN_FEATURES
    }

    /// Lays out scaled candidate rows (zero-padded to `candidate_size`)
    /// followed by the publisher scalars.
    pub fn encode(candidate_size: usize, rows: &[CandidateFeatures], pending: f64, height: f64) -> Result<Self> {
        if rows.len() > candidate_size {
            return Err(Error::Shape {
                what: "candidate rows",
                expected: candidate_size,
                got: rows.len(),
            });
        }
        let mut features = vec![0.0; Self::len_for(candidate_size)];
        let mut mask = vec![false; candidate_size];
        for (i, r) in rows.iter().enumerate() {
            let row = &mut features[i * CANDIDATE_FEATURES..(i + 1) * CANDIDATE_FEATURES];
            row.copy_from_slice(&[1.0, r.price, r.quality, r.pi_r, r.ref_weights[0], r.ref_weights[1], r.age]);
            mask[i] = true;
        }
        let tail = candidate_size * CANDIDATE_FEATURES;
        features[tail] = pending;
        features[tail + 1] = height;
        Ok(Self { features, mask })
    }

    pub fn candidate_size(&self) -> usize {
        self.mask.len()
    }

    /// Inverse of [`Observation::encode`]: the valid rows and the two scalars.
    pub fn decode(&self) -> (Vec<CandidateFeatures>, f64, f64) {
        let rows = self
            .features
            .chunks_exact(CANDIDATE_FEATURES)
            .take(self.mask.len())
            .zip(&self.mask)
            .filter(|(_, &valid)| valid)
            .map(|(r, _)| CandidateFeatures {
                price: r[1],
                quality: r[2],
                pi_r: r[3],
                ref_weights: [r[4], r[5]],
                age: r[6],
            })
            .collect();
        let tail = self.mask.len() * CANDIDATE_FEATURES;
        (rows, self.features[tail], self.features[tail + 1])
    }
}
