use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::env::{ActionTuple, Observation};
use crate::market::MarketParams;

/// Raw action layout: trigger, lambda, pi_r, dataset weight, model weight, price.
pub const ACTION_DIM: usize = 6;

pub const MIN_LOG_STD: f64 = -9.210_340_371_976_184; // ln 1e-4
pub const MAX_LOG_STD: f64 = std::f64::consts::LN_10;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log-density of `sample` under a diagonal Gaussian.
pub fn gaussian_log_prob(sample: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    sample
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((u, m), ls)| {
            let z = (u - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// Gradients of [`gaussian_log_prob`] with respect to the mean and log-std.
pub fn gaussian_log_prob_grad(sample: &[f64], mean: &[f64], log_std: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((u, m), ls) in sample.iter().zip(mean).zip(log_std) {
        let var = (2.0 * ls).exp();
        d_mean.push((u - m) / var);
        d_log_std.push((u - m) * (u - m) / var - 1.0);
    }
    (d_mean, d_log_std)
}

/// Differential entropy of a diagonal Gaussian. Its gradient with respect to
/// each log-std is 1.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
}

/// Clipped surrogate `min(r A, clip(r, 1-c, 1+c) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Derivative of [`clipped_surrogate`] with respect to the log-ratio.
/// Zero wherever the clipped branch is the active minimum.
pub fn clipped_surrogate_grad(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        ratio * advantage
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Actor (means), state-independent log-std, and critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
}

/// What the policy produced for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStep {
    pub action: ActionTuple,
    /// Squashed action in `(0, 1)^6`.
    pub raw: Vec<f64>,
    /// Pre-squash Gaussian sample.
    pub sample: Vec<f64>,
    pub log_prob: f64,
}

impl PolicyModel {
    pub fn new<R: Rng + ?Sized>(obs_len: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            actor: Mlp::new(&[obs_len, hidden, hidden, ACTION_DIM], 0.01, rng),
            log_std: vec![0.0; ACTION_DIM],
            critic: Mlp::new(&[obs_len, hidden, hidden, 1], 1.0, rng),
        }
    }

    pub fn obs_len(&self) -> usize {
        self.actor.input_len()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.critic.forward(obs)[0]
    }

    /// Deterministic action: the squashed mean.
    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        self.actor.forward(obs).into_iter().map(sigmoid).collect()
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(MIN_LOG_STD, MAX_LOG_STD);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>, f64) {
        let mean = self.actor.forward(obs);
        let sample: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let z: f64 = StandardNormal.sample(rng);
                m + ls.exp() * z
            })
            .collect();
        let log_prob = gaussian_log_prob(&sample, &mean, &self.log_std);
        let raw = sample.iter().map(|&u| sigmoid(u)).collect();
        (raw, sample, log_prob)
    }
}

/// Maps a squashed action vector onto the market's action bounds.
pub fn map_raw_action(raw: &[f64], params: &MarketParams) -> ActionTuple {
    let (a3, a4) = (raw[3], raw[4]);
    let share = 1.0 - params.w0;
    let ref_weights = if a3 + a4 > 0.0 {
        [share * a3 / (a3 + a4), share * a4 / (a3 + a4)]
    } else {
        [share / 2.0, share / 2.0]
    };
    let lambda = raw[1].clamp(0.0, 1.0);
    // A saturated sigmoid can round to exactly 1, where pi_r must vanish.
    let pi_r = if lambda < 1.0 { raw[2].clamp(0.0, 1.0) * params.pi_max } else { 0.0 };
    ActionTuple {
        trigger: raw[0] > 0.5,
        lambda,
        pi_r,
        ref_weights,
        price: (raw[5] * params.psi_max).clamp(params.psi_min, params.psi_max),
    }
}

/// Samples from the squashed Gaussian policy and maps to an action tuple.
pub fn choose_action<R: Rng + ?Sized>(
    model: &PolicyModel,
    observation: &Observation,
    params: &MarketParams,
    rng: &mut R,
) -> PolicyStep {
    let (raw, sample, log_prob) = model.sample(&observation.features, rng);
    PolicyStep {
        action: map_raw_action(&raw, params),
        raw,
        sample,
        log_prob,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::learner::mlp::tests::rel_err;

    #[test]
    fn threshold_and_symmetric_split() {
        let p = MarketParams::default();
        let a = map_raw_action(&[0.0, 0.9, 0.9, 0.9, 0.9, 0.9], &p);
        assert!(!a.trigger);
        assert_eq!(a.ref_weights[0], a.ref_weights[1]);
        assert!((a.ref_weights[0] - (1.0 - p.w0) / 2.0).abs() < 1e-15);
        let b = map_raw_action(&[0.6, 0.2, 0.5, 0.3, 0.1, 0.0], &p);
        assert!(b.trigger);
        assert_eq!(b.price, p.psi_min);
        assert!((b.pi_r - 0.5 * p.pi_max).abs() < 1e-15);
        assert!((b.ref_weights.iter().sum::<f64>() + p.w0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let r = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (u, m, ls) = (r(&mut rng), r(&mut rng), r(&mut rng));
        let (dm, dls) = gaussian_log_prob_grad(&u, &m, &ls);
        let h = 1e-6;
        let fd = |v: &[f64], f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
            (0..v.len())
                .map(|i| {
                    let (mut p, mut q) = (v.to_vec(), v.to_vec());
                    p[i] += h;
                    q[i] -= h;
                    (f(&p) - f(&q)) / (2.0 * h)
                })
                .collect()
        };
        assert!(rel_err(&dm, &fd(&m, &|m| gaussian_log_prob(&u, m, &ls))) < 1e-4);
        assert!(rel_err(&dls, &fd(&ls, &|ls| gaussian_log_prob(&u, &m, ls))) < 1e-4);
        let dent = fd(&ls, &|ls| gaussian_entropy(ls));
        assert!(rel_err(&dent, &vec![1.0; n]) < 1e-4);
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let h = 1e-6;
        for &adv in &[-1.3, -0.2, 0.4, 2.0] {
            for &log_ratio in &[-0.5, -0.1, 0.0, 0.05, 0.15, 0.6] {
                let f = |lr: f64| clipped_surrogate(f64::exp(lr), adv, 0.2);
                let ratio = f64::exp(log_ratio);
                // Skip the kinks at the clip boundaries.
                if ((ratio - 0.8).abs() < 1e-4) || ((ratio - 1.2).abs() < 1e-4) {
                    continue;
                }
                let fd = (f(log_ratio + h) - f(log_ratio - h)) / (2.0 * h);
                let an = clipped_surrogate_grad(ratio, adv, 0.2);
                assert!((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3) < 1e-4, "adv {adv} lr {log_ratio}");
            }
        }
    }

    #[test]
    fn untrained_policy_covers_the_action_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let model = PolicyModel::new(8, 16, &mut rng);
        let obs = vec![0.3; 8];
        let mut lo = [1.0f64; ACTION_DIM];
        let mut hi = [0.0f64; ACTION_DIM];
        for _ in 0..10_000 {
            let (raw, _, lp) = model.sample(&obs, &mut rng);
            assert!(lp.is_finite());
            for k in 0..ACTION_DIM {
                lo[k] = lo[k].min(raw[k]);
                hi[k] = hi[k].max(raw[k]);
            }
        }
        for k in 0..ACTION_DIM {
            assert!(lo[k] < 0.05 && hi[k] > 0.95, "dim {k}: [{}, {}]", lo[k], hi[k]);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let model = PolicyModel::new(3, 8, &mut ChaCha8Rng::seed_from_u64(1));
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| model.sample(&[0.1, 0.2, 0.3], &mut rng).1).collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
    }
}
