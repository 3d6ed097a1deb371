use serde::{Deserialize, Serialize};

use crate::market::MarketParams;

/// One publisher decision for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionTuple {
    pub trigger: bool,
    /// Down-payment ratio.
    pub lambda: f64,
    /// Optional payment.
    pub pi_r: f64,
    /// Weights offered to the dataset and model references; rescaled with
    /// `w0` onto the simplex before minting.
    pub ref_weights: [f64; 2],
    /// Unit price quoted for the new NFT.
    pub price: f64,
}

impl ActionTuple {
    pub fn idle() -> Self {
        Self {
            trigger: false,
            lambda: 0.0,
            pi_r: 0.0,
            ref_weights: [0.0, 0.0],
            price: 0.0,
        }
    }

    /// Returns the first violated bound, if any. Only publishing actions are
    /// checked.
    pub fn validate(&self, params: &MarketParams) -> Result<(), String> {
        if !self.trigger {
            return Ok(());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(0.0..=params.pi_max).contains(&self.pi_r) {
            return Err(format!("pi_r {} outside [0, {}]", self.pi_r, params.pi_max));
        }
        if self.lambda == 1.0 && self.pi_r > 0.0 {
            return Err("pi_r must be zero with a full down payment".into());
        }
        if self.ref_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("reference weights {:?} must be finite and >= 0", self.ref_weights));
        }
        if !(self.price > 0.0 && self.price <= params.psi_max) {
            return Err(format!("price {} outside (0, {}]", self.price, params.psi_max));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn publish() -> ActionTuple {
        ActionTuple {
            trigger: true,
            lambda: 0.5,
            pi_r: 0.1,
            ref_weights: [0.4, 0.4],
            price: 0.5,
        }
    }

    #[test]
    fn bounds_are_enforced() {
        let p = MarketParams::default();
        assert!(publish().validate(&p).is_ok());
        assert!(ActionTuple { lambda: 1.5, ..publish() }.validate(&p).is_err());
        assert!(ActionTuple { pi_r: 9.0, ..publish() }.validate(&p).is_err());
        assert!(ActionTuple { price: 0.0, ..publish() }.validate(&p).is_err());
        assert!(ActionTuple { lambda: 1.0, ..publish() }.validate(&p).is_err());
        assert!(ActionTuple { ref_weights: [f64::NAN, 0.0], ..publish() }.validate(&p).is_err());
        assert!(ActionTuple::idle().validate(&p).is_ok());
    }
}
