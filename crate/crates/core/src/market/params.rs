use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the base decay horizon depends on the down-payment ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// `d_hat` is used as configured, whatever the down payment.
    #[default]
    Constant,
    /// `d_hat` shrinks linearly with the down payment: `max(1, ceil(d_hat * (1 - lambda)))`.
    LinearInRemainder,
}

/// Global constants of the reference-incentive mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Initial raw interest rate.
    pub q_hat: f64,
    /// Initial descending rate of income, in `(0, 1]`.
    pub sigma_hat: f64,
    /// Initial decay parameter (rounds of installments and income).
    pub d_hat: u32,
    /// Bonus granted when a new NFT outperforms its whole candidate set.
    pub fixed_reward: f64,
    /// Fixed expense charged for every mint.
    pub fixed_expense: f64,
    /// Income per referral per round before quality and descent scaling.
    pub k: f64,
    /// Self-reference weight.
    pub w0: f64,
    /// Unit-price cap.
    pub psi_max: f64,
    /// Smallest unit price an agent may quote.
    pub psi_min: f64,
    /// Cap on the optional payment.
    pub pi_max: f64,
    pub kappa_d: f64,
    pub kappa_q: f64,
    pub kappa_sigma: f64,
    /// Lower clamp for the descending rate.
    pub sigma_floor: f64,
    /// Candidate set size.
    pub candidate_size: usize,
    pub n_publishers: usize,
    pub decay_mode: DecayMode,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            q_hat: 0.01,
            sigma_hat: 0.9,
            d_hat: 10,
            fixed_reward: 2.0,
            fixed_expense: 0.1,
            k: 0.1,
            w0: 0.2,
            psi_max: 1.0,
            psi_min: 0.01,
            pi_max: 0.5,
            kappa_d: 10.0,
            kappa_q: 2.0,
            kappa_sigma: 0.5,
            sigma_floor: 0.05,
            candidate_size: 10,
            n_publishers: 10,
            decay_mode: DecayMode::Constant,
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, reason))
            }
        }
        let finite = [
            ("q_hat", self.q_hat),
            ("sigma_hat", self.sigma_hat),
            ("fixed_reward", self.fixed_reward),
            ("fixed_expense", self.fixed_expense),
            ("k", self.k),
            ("w0", self.w0),
            ("psi_max", self.psi_max),
            ("psi_min", self.psi_min),
            ("pi_max", self.pi_max),
            ("kappa_d", self.kappa_d),
            ("kappa_q", self.kappa_q),
            ("kappa_sigma", self.kappa_sigma),
            ("sigma_floor", self.sigma_floor),
        ];
        for (field, value) in finite {
            check(value.is_finite(), field, "must be finite")?;
        }
        check(self.q_hat >= 0.0, "q_hat", "must be >= 0")?;
        check(
            self.sigma_hat > 0.0 && self.sigma_hat <= 1.0,
            "sigma_hat",
            "must lie in (0, 1]",
        )?;
        check(self.d_hat >= 1, "d_hat", "must be >= 1")?;
        check(self.fixed_reward > 0.0, "fixed_reward", "must be > 0")?;
        check(self.fixed_expense > 0.0, "fixed_expense", "must be > 0")?;
        check(self.k >= 0.0, "k", "must be >= 0")?;
        check(self.w0 >= 0.0 && self.w0 < 1.0, "w0", "must lie in [0, 1)")?;
        check(self.psi_max > 0.0, "psi_max", "must be > 0")?;
        check(
            self.psi_min > 0.0 && self.psi_min <= self.psi_max,
            "psi_min",
            "must lie in (0, psi_max]",
        )?;
        check(self.pi_max >= 0.0, "pi_max", "must be >= 0")?;
        check(self.kappa_d >= 0.0, "kappa_d", "must be >= 0")?;
        check(self.kappa_q >= 0.0, "kappa_q", "must be >= 0")?;
        check(self.kappa_sigma >= 0.0, "kappa_sigma", "must be >= 0")?;
        check(
            self.sigma_floor > 0.0 && self.sigma_floor <= self.sigma_hat,
            "sigma_floor",
            "must lie in (0, sigma_hat]",
        )?;
        check(self.candidate_size >= 1, "candidate_size", "must be >= 1")?;
        check(self.n_publishers >= 1, "n_publishers", "must be >= 1")?;
        Ok(())
    }

    /// Largest decay parameter reachable with `pi_r <= pi_max`.
    pub fn d_max(&self) -> u32 {
        self.d_hat + (self.kappa_d * self.pi_max).floor() as u32
    }
}
