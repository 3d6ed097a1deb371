use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, QualityDistribution};
use crate::error::{Error, Result};
use crate::learner::PpoConfig;
use crate::market::{DecayMode, MarketParams};

/// Flat, file-backed description of one experiment. Every market, game and
/// learner knob is a top-level key so sweeps can address it by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epochs: u64,
    pub seeds: Vec<u64>,

    pub n_publishers: usize,
    pub quality_distribution: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_std_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_rate: Option<f64>,

    pub q_hat: f64,
    pub sigma_hat: f64,
    pub d_hat: u32,
    pub fixed_reward: f64,
    pub fixed_expense: f64,
    pub k: f64,
    pub w0: f64,
    pub psi_max: f64,
    pub psi_min: f64,
    pub pi_max: f64,
    pub kappa_d: f64,
    pub kappa_q: f64,
    pub kappa_sigma: f64,
    pub sigma_floor: f64,
    pub candidate_size: usize,
    pub decay_mode: DecayMode,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genesis_count: Option<usize>,

    pub hidden: usize,
    pub batch_size: usize,
    pub capacity: usize,
    pub update_epochs: usize,
    pub clip: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = MarketParams::default();
        let e = EnvConfig::default();
        let l = PpoConfig::default();
        Self {
            epochs: 100,
            seeds: vec![0, 1, 2, 3, 4],
            n_publishers: m.n_publishers,
            quality_distribution: "uniform".into(),
            quality_mean: None,
            quality_std_dev: None,
            quality_scale: None,
            quality_alpha: None,
            quality_rate: None,
            q_hat: m.q_hat,
            sigma_hat: m.sigma_hat,
            d_hat: m.d_hat,
            fixed_reward: m.fixed_reward,
            fixed_expense: m.fixed_expense,
            k: m.k,
            w0: m.w0,
            psi_max: m.psi_max,
            psi_min: m.psi_min,
            pi_max: m.pi_max,
            kappa_d: m.kappa_d,
            kappa_q: m.kappa_q,
            kappa_sigma: m.kappa_sigma,
            sigma_floor: m.sigma_floor,
            candidate_size: m.candidate_size,
            decay_mode: m.decay_mode,
            window: e.window,
            gamma: e.gamma,
            genesis_count: e.genesis_count,
            hidden: l.hidden,
            batch_size: l.batch_size,
            capacity: l.capacity,
            update_epochs: l.epochs,
            clip: l.clip,
            learning_rate: l.learning_rate,
            entropy_coef: l.entropy_coef,
        }
    }
}

/// Keys a sweep may vary; all take numeric values.
pub const SWEEP_AXES: &[&str] = &[
    "n_publishers",
    "q_hat",
    "sigma_hat",
    "d_hat",
    "fixed_reward",
    "fixed_expense",
    "k",
    "w0",
    "psi_max",
    "psi_min",
    "pi_max",
    "kappa_d",
    "kappa_q",
    "kappa_sigma",
    "sigma_floor",
    "candidate_size",
    "window",
    "gamma",
    "genesis_count",
    "epochs",
];

fn as_count(axis: &str, value: f64) -> Result<u64> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(Error::config(axis, format!("expects a non-negative integer, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let field = reason
                .split('`')
                .nth(1)
                .filter(|_| reason.starts_with("unknown field"))
                .unwrap_or("config")
                .to_string();
            Error::config(field, reason)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Effective configuration, every key spelled out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn market(&self) -> MarketParams {
        MarketParams {
            q_hat: self.q_hat,
            sigma_hat: self.sigma_hat,
            d_hat: self.d_hat,
            fixed_reward: self.fixed_reward,
            fixed_expense: self.fixed_expense,
            k: self.k,
            w0: self.w0,
            psi_max: self.psi_max,
            psi_min: self.psi_min,
            pi_max: self.pi_max,
            kappa_d: self.kappa_d,
            kappa_q: self.kappa_q,
            kappa_sigma: self.kappa_sigma,
            sigma_floor: self.sigma_floor,
            candidate_size: self.candidate_size,
            n_publishers: self.n_publishers,
            decay_mode: self.decay_mode,
        }
    }

    pub fn quality(&self) -> Result<QualityDistribution> {
        let base = QualityDistribution::from_name(&self.quality_distribution)?;
        let given = [
            ("quality_mean", self.quality_mean),
            ("quality_std_dev", self.quality_std_dev),
            ("quality_scale", self.quality_scale),
            ("quality_alpha", self.quality_alpha),
            ("quality_rate", self.quality_rate),
        ];
        let allowed: &[&str] = match base {
            QualityDistribution::Uniform => &[],
            QualityDistribution::Normal { .. } => &["quality_mean", "quality_std_dev"],
            QualityDistribution::Pareto { .. } => &["quality_scale", "quality_alpha"],
            QualityDistribution::Poisson { .. } => &["quality_rate"],
        };
        if let Some((field, _)) = given.iter().find(|(f, v)| v.is_some() && !allowed.contains(f)) {
            return Err(Error::config(
                *field,
                format!("does not apply to the {} distribution", base.name()),
            ));
        }
        let dist = match base {
            QualityDistribution::Uniform => base,
            QualityDistribution::Normal { mean, std_dev } => QualityDistribution::Normal {
                mean: self.quality_mean.unwrap_or(mean),
                std_dev: self.quality_std_dev.unwrap_or(std_dev),
            },
            QualityDistribution::Pareto { scale, alpha } => QualityDistribution::Pareto {
                scale: self.quality_scale.unwrap_or(scale),
                alpha: self.quality_alpha.unwrap_or(alpha),
            },
            QualityDistribution::Poisson { rate } => QualityDistribution::Poisson {
                rate: self.quality_rate.unwrap_or(rate),
            },
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        Ok(EnvConfig {
            market: self.market(),
            window: self.window,
            gamma: self.gamma,
            horizon: self.epochs.max(1),
            genesis_count: self.genesis_count,
            quality: self.quality()?,
        })
    }

    pub fn learner(&self) -> PpoConfig {
        PpoConfig {
            hidden: self.hidden,
            batch_size: self.batch_size,
            capacity: self.capacity,
            epochs: self.update_epochs,
            clip: self.clip,
            learning_rate: self.learning_rate,
            entropy_coef: self.entropy_coef,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "needs at least one seed"));
        }
        self.env_config()?.validate()?;
        self.learner().validate().map_err(|e| match e {
            // Learner keys are flat here; drop the table prefix.
            Error::Config { field, reason } => Error::Config {
                field: field.trim_start_matches("learner.").replace("epochs", "update_epochs"),
                reason,
            },
            other => other,
        })
    }

    /// Returns a copy with `axis` set to `value`, validated.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            "n_publishers" => c.n_publishers = as_count(axis, value)? as usize,
            "q_hat" => c.q_hat = value,
            "sigma_hat" => c.sigma_hat = value,
            "d_hat" => c.d_hat = as_count(axis, value)? as u32,
            "fixed_reward" => c.fixed_reward = value,
            "fixed_expense" => c.fixed_expense = value,
            "k" => c.k = value,
            "w0" => c.w0 = value,
            "psi_max" => c.psi_max = value,
            "psi_min" => c.psi_min = value,
            "pi_max" => c.pi_max = value,
            "kappa_d" => c.kappa_d = value,
            "kappa_q" => c.kappa_q = value,
            "kappa_sigma" => c.kappa_sigma = value,
            "sigma_floor" => c.sigma_floor = value,
            "candidate_size" => c.candidate_size = as_count(axis, value)? as usize,
            "window" => c.window = Some(as_count(axis, value)?),
            "gamma" => c.gamma = value,
            "genesis_count" => c.genesis_count = Some(as_count(axis, value)? as usize),
            "epochs" => c.epochs = as_count(axis, value)?,
            other => {
                return Err(Error::config(
                    "axis",
                    format!("unknown axis `{other}` (expected one of {})", SWEEP_AXES.join(", ")),
                ))
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        let text = c.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_toml_str("q_hatt = 0.1\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "q_hatt"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn out_of_bounds_values_are_named() {
        for (text, field) in [
            ("epochs = 0", "epochs"),
            ("seeds = []", "seeds"),
            ("sigma_hat = 1.5", "sigma_hat"),
            ("quality_distribution = \"zipf\"", "quality_distribution"),
            ("quality_rate = 2.0", "quality_rate"),
            ("batch_size = 0", "batch_size"),
            ("update_epochs = 0", "update_epochs"),
        ] {
            match ExperimentConfig::from_toml_str(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c = ExperimentConfig::from_toml_str("# comment\nq_hat = 0.5\nquality_distribution = \"normal\"\nquality_mean = 0.3\n").unwrap();
        assert_eq!(c.q_hat, 0.5);
        assert_eq!(
            c.quality().unwrap(),
            QualityDistribution::Normal {
                mean: 0.3,
                std_dev: 0.15
            }
        );
        assert_eq!(c.d_hat, 10);
    }

    #[test]
    fn axes_are_checked() {
        let c = ExperimentConfig::default();
        assert_eq!(c.with_axis("d_hat", 30.0).unwrap().d_hat, 30);
        assert!(matches!(c.with_axis("d_hat", 2.5), Err(Error::Config { .. })));
        assert!(matches!(c.with_axis("bogus", 1.0), Err(Error::Config { field, .. }) if field == "axis"));
        for axis in SWEEP_AXES {
            // Every advertised axis is settable.
            let v = if *axis == "sigma_floor" { 0.05 } else { 1.0 };
            let r = c.with_axis(axis, v);
            assert!(!matches!(r, Err(Error::Config { ref field, .. }) if field == "axis"), "{axis}");
        }
    }
}
