use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of resource qualities. Every draw is clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum QualityDistribution {
    Uniform,
    Normal { mean: f64, std_dev: f64 },
    Pareto { scale: f64, alpha: f64 },
    /// Counts are divided by the largest count observed so far.
    Poisson { rate: f64 },
}

impl Default for QualityDistribution {
    fn default() -> Self {
        QualityDistribution::Uniform
    }
}

impl QualityDistribution {
    pub fn normal() -> Self {
        QualityDistribution::Normal {
            mean: 0.5,
            std_dev: 0.15,
        }
    }

    pub fn pareto() -> Self {
        QualityDistribution::Pareto { scale: 0.1, alpha: 1.16 }
    }

    pub fn poisson() -> Self {
        QualityDistribution::Poisson { rate: 3.0 }
    }

    /// Parses `uniform`, `normal`, `pareto` or `poisson` with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(QualityDistribution::Uniform),
            "normal" => Ok(Self::normal()),
            "pareto" => Ok(Self::pareto()),
            "poisson" => Ok(Self::poisson()),
            other => Err(Error::config(
                "quality_distribution",
                format!("unknown family `{other}` (expected uniform, normal, pareto or poisson)"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QualityDistribution::Uniform => "uniform",
            QualityDistribution::Normal { .. } => "normal",
            QualityDistribution::Pareto { .. } => "pareto",
            QualityDistribution::Poisson { .. } => "poisson",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            QualityDistribution::Uniform => true,
            QualityDistribution::Normal { mean, std_dev } => mean.is_finite() && std_dev > 0.0 && std_dev.is_finite(),
            QualityDistribution::Pareto { scale, alpha } => scale > 0.0 && alpha > 0.0 && scale.is_finite() && alpha.is_finite(),
            QualityDistribution::Poisson { rate } => rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("quality_distribution", format!("invalid parameters {self:?}")))
        }
    }
}

/// Stateful sampler; the Poisson family needs the running maximum.
#[derive(Debug, Clone)]
pub struct QualitySampler {
    dist: QualityDistribution,
    poisson_max: f64,
}

impl QualitySampler {
    pub fn new(dist: QualityDistribution) -> Result<Self> {
        dist.validate()?;
        Ok(Self { dist, poisson_max: 0.0 })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let x = match self.dist {
            QualityDistribution::Uniform => rng.random::<f64>(),
            QualityDistribution::Normal { mean, std_dev } => Normal::new(mean, std_dev).expect("validated").sample(rng),
            QualityDistribution::Pareto { scale, alpha } => Pareto::new(scale, alpha).expect("validated").sample(rng),
            QualityDistribution::Poisson { rate } => {
                let count: f64 = Poisson::new(rate).expect("validated").sample(rng);
                self.poisson_max = self.poisson_max.max(count);
                if self.poisson_max > 0.0 {
                    count / self.poisson_max
                } else {
                    0.0
                }
            }
        };
        x.clamp(0.0, 1.0)
    }
}
