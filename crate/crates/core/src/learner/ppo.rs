use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::optim::Adam;
use super::policy::{
    choose_action, clipped_surrogate, clipped_surrogate_grad, gaussian_entropy, gaussian_log_prob,
    gaussian_log_prob_grad, PolicyModel, PolicyStep,
};
use super::Learner;
use crate::env::{Observation, Transition};
use crate::error::{Error, Result};
use crate::ledger::NftId;
use crate::market::MarketParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub capacity: usize,
    pub epochs: usize,
    pub clip: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            batch_size: 64,
            capacity: 4096,
            epochs: 4,
            clip: 0.2,
            learning_rate: 3e-4,
            entropy_coef: 1e-3,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::config("learner.hidden", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("learner.batch_size", "must be positive"));
        }
        if self.capacity < self.batch_size {
            return Err(Error::config("learner.capacity", "must be at least batch_size"));
        }
        if self.epochs == 0 {
            return Err(Error::config("learner.epochs", "must be positive"));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::config("learner.clip", "must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learner.learning_rate", "must be positive and finite"));
        }
        if !(self.entropy_coef >= 0.0 && self.entropy_coef.is_finite()) {
            return Err(Error::config("learner.entropy_coef", "must be non-negative and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Mean policy loss over epochs, entropy bonus included.
    pub loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
}

/// Why an update did not run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Skipped {
    pub have: usize,
    pub need: usize,
}

impl fmt::Display for Skipped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "buffer holds {} transitions, update needs {}", self.have, self.need)
    }
}

/// One row of a policy batch.
#[derive(Debug, Clone)]
pub struct BatchItem<'a> {
    pub state: &'a [f64],
    pub sample: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
}

/// Gradient of the policy loss for one batch.
#[derive(Debug, Clone)]
pub struct PolicyGrad {
    pub loss: f64,
    pub actor: Vec<f64>,
    pub log_std: Vec<f64>,
    pub clipped: usize,
}

/// `-mean(clipped surrogate) - entropy_coef * entropy`.
pub fn policy_loss(model: &PolicyModel, batch: &[BatchItem], clip: f64, entropy_coef: f64) -> f64 {
    let n = batch.len() as f64;
    let surrogate: f64 = batch
        .iter()
        .map(|b| {
            let mean = model.actor.forward(b.state);
            let ratio = (gaussian_log_prob(b.sample, &mean, &model.log_std) - b.old_log_prob).exp();
            clipped_surrogate(ratio, b.advantage, clip)
        })
        .sum();
    -surrogate / n - entropy_coef * gaussian_entropy(&model.log_std)
}

pub fn policy_loss_grad(model: &PolicyModel, batch: &[BatchItem], clip: f64, entropy_coef: f64) -> PolicyGrad {
    let n = batch.len() as f64;
    let mut actor = vec![0.0; model.actor.params().len()];
    let mut log_std = vec![-entropy_coef; model.log_std.len()];
    let mut surrogate = 0.0;
    let mut clipped = 0;
    for b in batch {
        let (mean, cache) = model.actor.forward_cached(b.state);
        let ratio = (gaussian_log_prob(b.sample, &mean, &model.log_std) - b.old_log_prob).exp();
        surrogate += clipped_surrogate(ratio, b.advantage, clip);
        if (ratio - 1.0).abs() > clip {
            clipped += 1;
        }
        let d_logp = -clipped_surrogate_grad(ratio, b.advantage, clip) / n;
        if d_logp == 0.0 {
            continue;
        }
        let (d_mean, d_ls) = gaussian_log_prob_grad(b.sample, &mean, &model.log_std);
        let grad_out: Vec<f64> = d_mean.iter().map(|g| g * d_logp).collect();
        model.actor.backward(&cache, &grad_out, &mut actor);
        for (acc, g) in log_std.iter_mut().zip(d_ls) {
            *acc += g * d_logp;
        }
    }
    PolicyGrad {
        loss: -surrogate / n - entropy_coef * gaussian_entropy(&model.log_std),
        actor,
        log_std,
        clipped,
    }
}

/// Mean squared error of the critic against `targets` and its gradient.
pub fn value_loss_grad(model: &PolicyModel, states: &[&[f64]], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = states.len() as f64;
    let mut grad = vec![0.0; model.critic.params().len()];
    let mut loss = 0.0;
    for (s, t) in states.iter().zip(targets) {
        let (v, cache) = model.critic.forward_cached(s);
        let err = v[0] - t;
        loss += err * err / n;
        model.critic.backward(&cache, &[2.0 * err / n], &mut grad);
    }
    (loss, grad)
}

/// Centers and scales advantages; a constant batch collapses to zeros.
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in values.iter_mut() {
        *v -= mean;
        if std > 1e-8 {
            *v /= std;
        }
    }
}

/// Optimizer state for the three parameter groups of a [`PolicyModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub actor: Adam,
    pub log_std: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(model: &PolicyModel, lr: f64) -> Self {
        Self {
            actor: Adam::new(model.actor.params().len(), lr),
            log_std: Adam::new(model.log_std.len(), lr),
            critic: Adam::new(model.critic.params().len(), lr),
        }
    }
}

/// Runs `config.epochs` minibatch steps. Rewards are divided by
/// `reward_scale` before they reach the critic and the advantages.
pub fn update<R: Rng + ?Sized>(
    model: &mut PolicyModel,
    opt: &mut Optimizers,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    reward_scale: f64,
    rng: &mut R,
) -> std::result::Result<UpdateStats, Skipped> {
    if buffer.len() < config.batch_size {
        return Err(Skipped {
            have: buffer.len(),
            need: config.batch_size,
        });
    }
    let scale = if reward_scale > 0.0 { reward_scale } else { 1.0 };
    let mut stats = UpdateStats::default();
    for _ in 0..config.epochs {
        let batch = buffer.sample(config.batch_size, rng);
        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.features.as_slice()).collect();
        let targets: Vec<f64> = batch.iter().map(|t| t.reward() / scale).collect();
        let mut advantages: Vec<f64> = states.iter().zip(&targets).map(|(s, r)| r - model.value(s)).collect();
        standardize(&mut advantages);
        let items: Vec<BatchItem> = batch
            .iter()
            .zip(&advantages)
            .map(|(t, &a)| BatchItem {
                state: &t.state.features,
                sample: &t.sample,
                old_log_prob: t.log_prob,
                advantage: a,
            })
            .collect();

        let g = policy_loss_grad(model, &items, config.clip, config.entropy_coef);
        let (v_loss, v_grad) = value_loss_grad(model, &states, &targets);
        opt.actor.step(model.actor.params_mut(), &g.actor);
        opt.log_std.step(&mut model.log_std, &g.log_std);
        model.clamp_log_std();
        opt.critic.step(model.critic.params_mut(), &v_grad);

        stats.loss += g.loss;
        stats.value_loss += v_loss;
        stats.clip_fraction += g.clipped as f64 / items.len() as f64;
    }
    let e = config.epochs as f64;
    stats.loss /= e;
    stats.value_loss /= e;
    stats.clip_fraction /= e;
    stats.entropy = gaussian_entropy(&model.log_std);
    Ok(stats)
}

/// A publisher's clipped policy-gradient agent. Transitions of minted NFTs
/// wait in `pending` until their settlement reports the totals.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    config: PpoConfig,
    market: MarketParams,
    pub(crate) model: PolicyModel,
    opt: Optimizers,
    buffer: RolloutBuffer,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) reward_scale: f64,
    pending: BTreeMap<NftId, Transition>,
    last_skip: Option<Skipped>,
}

impl PpoAgent {
    pub fn new(obs_len: usize, market: MarketParams, config: PpoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PolicyModel::new(obs_len, config.hidden, &mut rng);
        Ok(Self::from_parts(model, market, config, rng, 0.0))
    }

    pub(crate) fn from_parts(
        model: PolicyModel,
        market: MarketParams,
        config: PpoConfig,
        rng: ChaCha8Rng,
        reward_scale: f64,
    ) -> Self {
        let opt = Optimizers::new(&model, config.learning_rate);
        let buffer = RolloutBuffer::new(config.capacity);
        Self {
            config,
            market,
            model,
            opt,
            buffer,
            rng,
            reward_scale,
            pending: BTreeMap::new(),
            last_skip: None,
        }
    }

    pub fn config(&self) -> &PpoConfig {
        &self.config
    }

    pub fn model(&self) -> &PolicyModel {
        &self.model
    }

    pub fn buffer(&self) -> &RolloutBuffer {
        &self.buffer
    }

    pub fn reward_scale(&self) -> f64 {
        self.reward_scale
    }

    /// Diagnostic from the most recent skipped update, cleared by a
    /// successful one.
    pub fn last_skip(&self) -> Option<Skipped> {
        self.last_skip
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Holds a minted NFT's transition until settlement.
    pub fn defer(&mut self, id: NftId, transition: Transition) {
        self.pending.insert(id, transition);
    }

    /// Completes a deferred transition. Returns false for unknown ids.
    pub fn settle(&mut self, id: NftId, income_total: f64, outcome_total: f64) -> bool {
        match self.pending.remove(&id) {
            Some(mut t) => {
                t.income_total = income_total;
                t.outcome_total = outcome_total;
                self.record(t);
                true
            }
            None => false,
        }
    }
}

impl Learner for PpoAgent {
    fn act(&mut self, observation: &Observation) -> PolicyStep {
        choose_action(&self.model, observation, &self.market, &mut self.rng)
    }

    fn record(&mut self, transition: Transition) {
        self.reward_scale = self.reward_scale.max(transition.reward().abs());
        self.buffer.push(transition);
    }

    fn update(&mut self) -> Option<UpdateStats> {
        match update(
            &mut self.model,
            &mut self.opt,
            &self.buffer,
            &self.config,
            self.reward_scale,
            &mut self.rng,
        ) {
            Ok(stats) => {
                self.last_skip = None;
                Some(stats)
            }
            Err(skip) => {
                self.last_skip = Some(skip);
                None
            }
        }
    }
}
