//! The repeated pricing game: every epoch each publisher observes a
//! candidate set, chooses an action, and the environment mints the
//! triggered NFTs, closes the round on the ledger and reports settlements.

mod action;
mod observation;
mod quality;

pub use action::ActionTuple;
pub use observation::{CandidateFeatures, Observation, CANDIDATE_FEATURES, OWN_FEATURES};
pub use quality::{QualityDistribution, QualitySampler};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{CandidateSet, Ledger, MintRequest, NftId, NftKind, Reference, SettlementEvent};
use crate::market::{self, MarketParams, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub market: MarketParams,
    /// Sliding-window length in rounds; `None` uses `d_hat`.
    pub window: Option<u64>,
    /// Price aversion used when picking which candidate to reference.
    pub gamma: f64,
    /// Height used to scale the height feature; usually the run length.
    pub horizon: u64,
    /// Genesis NFTs seeded at height 0; `None` uses `2 * candidate_size`.
    pub genesis_count: Option<usize>,
    pub quality: QualityDistribution,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            market: MarketParams::default(),
            window: None,
            gamma: 1.0,
            horizon: 100,
            genesis_count: None,
            quality: QualityDistribution::Uniform,
        }
    }
}

impl EnvConfig {
    pub fn window(&self) -> u64 {
        self.window.unwrap_or(self.market.d_hat as u64)
    }

    pub fn genesis_count(&self) -> usize {
        self.genesis_count.unwrap_or(2 * self.market.candidate_size)
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.quality.validate()?;
        if self.window() == 0 {
            return Err(Error::config("window", "must be >= 1"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "must be finite and >= 0"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        Ok(())
    }

    pub fn observation_len(&self) -> usize {
        Observation::len_for(self.market.candidate_size)
    }
}

/// An action that failed validation; it is executed as a no-op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub publisher: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// The round that was closed.
    pub height: u64,
    /// `(publisher, id)` in execution order.
    pub minted: Vec<(usize, NftId)>,
    pub rejected: Vec<Rejection>,
    /// Settlements of publisher-owned NFTs.
    pub settlements: Vec<SettlementEvent>,
    pub next_observations: Vec<Observation>,
}

/// Experience record kept by a learner: the observation at decision time,
/// the next observation, the action and, once known, the NFT's totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub tx_id: Option<NftId>,
    pub state: Observation,
    pub next_state: Observation,
    pub action: ActionTuple,
    /// Pre-squash policy sample and its log-density at decision time.
    pub sample: Vec<f64>,
    pub log_prob: f64,
    pub outcome_total: f64,
    pub income_total: f64,
}

impl Transition {
    pub fn reward(&self) -> f64 {
        market::payoff(self.income_total, self.outcome_total)
    }
}

/// Reward of one minted NFT as seen at some height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardStatus {
    /// Still inside its decay horizon.
    Pending,
    Settled(f64),
    /// Unsettled when the run ended.
    Null,
}

/// Reward carried by a settlement event.
pub fn reward(event: &SettlementEvent) -> f64 {
    market::payoff(event.income_total, event.outcome_total)
}

pub struct Env {
    config: EnvConfig,
    ledger: Ledger,
    rng: ChaCha8Rng,
    sampler: QualitySampler,
    /// Candidate set behind each publisher's latest observation.
    candidates: Vec<CandidateSet>,
}

impl Env {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut ledger = Ledger::new(config.market.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampler = QualitySampler::new(config.quality)?;
        let psi_max = config.market.psi_max;
        for i in 0..config.genesis_count() {
            let kind = if i % 2 == 0 { NftKind::Dataset } else { NftKind::Model };
            let quality = sampler.sample(&mut rng);
            let price = psi_max * (1.0 - rng.random::<f64>());
            ledger.seed_genesis(kind, quality, price)?;
        }
        let n = config.market.n_publishers;
        Ok(Self {
            config,
            ledger,
            rng,
            sampler,
            candidates: vec![CandidateSet::default(); n],
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn n_publishers(&self) -> usize {
        self.config.market.n_publishers
    }

    /// Height new mints will land in.
    pub fn height(&self) -> u64 {
        self.ledger.open_height()
    }

    /// Samples a fresh candidate set for `publisher` and encodes it.
    pub fn observe(&mut self, publisher: usize) -> Observation {
        let m = &self.config.market;
        let height = self.ledger.height();
        let window = self.config.window();
        let set = self.ledger.candidate_set(height, window, m.candidate_size, &mut self.rng);
        let rows: Vec<CandidateFeatures> = set
            .entries
            .iter()
            .map(|e| {
                let mut ref_weights = [0.0; 2];
                for (slot, w) in ref_weights.iter_mut().zip(e.weights.refs()) {
                    *slot = *w;
                }
                CandidateFeatures {
                    price: e.price / m.psi_max,
                    quality: e.quality,
                    pi_r: if m.pi_max > 0.0 { e.pi_r / m.pi_max } else { 0.0 },
                    ref_weights,
                    age: (e.age as f64 / window as f64).min(1.0),
                }
            })
            .collect();
        let pending = (self.ledger.pending_count(publisher) as f64 / m.d_max() as f64).min(1.0);
        let height_feature = (self.ledger.open_height() as f64 / self.config.horizon as f64).min(1.0);
        self.candidates[publisher] = set;
        Observation::encode(m.candidate_size, &rows, pending, height_feature).expect("candidate set never exceeds its size")
    }

    pub fn observe_all(&mut self) -> Vec<Observation> {
        (0..self.n_publishers()).map(|p| self.observe(p)).collect()
    }

    /// Executes one epoch. Triggered actions mint in a seeded shuffled order;
    /// invalid actions are reported and skipped.
    pub fn step(&mut self, actions: &[ActionTuple]) -> Result<StepOutcome> {
        let n = self.n_publishers();
        if actions.len() != n {
            return Err(Error::Shape {
                what: "actions",
                expected: n,
                got: actions.len(),
            });
        }
        let mut rejected = Vec::new();
        let mut order: Vec<usize> = Vec::new();
        for (publisher, a) in actions.iter().enumerate() {
            match a.validate(&self.config.market) {
                Ok(()) if a.trigger => order.push(publisher),
                Ok(()) => {}
                Err(reason) => rejected.push(Rejection { publisher, reason }),
            }
        }
        order.shuffle(&mut self.rng);

        let mut minted = Vec::with_capacity(order.len());
        for publisher in order {
            match self.mint_for(publisher, &actions[publisher]) {
                Ok(id) => minted.push((publisher, id)),
                Err(e) => rejected.push(Rejection {
                    publisher,
                    reason: e.to_string(),
                }),
            }
        }

        let height = self.ledger.open_height();
        let settlements = self
            .ledger
            .advance_round(height)?
            .into_iter()
            .filter(|e| e.publisher.is_some())
            .collect();
        let next_observations = self.observe_all();
        Ok(StepOutcome {
            height,
            minted,
            rejected,
            settlements,
            next_observations,
        })
    }

    fn mint_for(&mut self, publisher: usize, action: &ActionTuple) -> Result<NftId> {
        let gamma = self.config.gamma;
        let set = &self.candidates[publisher];
        let mut theta = Vec::with_capacity(2);
        let mut raw = Vec::with_capacity(2);
        let mut ref_qualities = Vec::with_capacity(2);
        for (slot, w) in [NftKind::Dataset, NftKind::Model].into_iter().zip(action.ref_weights) {
            let taken: Vec<NftId> = theta.iter().map(|r: &Reference| r.id).collect();
            if let Some(c) = set.best_for(slot, gamma, &taken) {
                theta.push(Reference { id: c.id, slot });
                raw.push(w);
                ref_qualities.push(c.quality);
            }
        }
        let weights = WeightVector::normalized(self.config.market.w0, &raw)?;
        let base_quality = self.sampler.sample(&mut self.rng);
        let quality = market::quality(&weights, &ref_qualities, base_quality)?;
        let competitors = set.qualities();
        let request = MintRequest {
            publisher: Some(publisher),
            kind: NftKind::Composite,
            theta,
            weights,
            quality,
            price: action.price,
            pi_r: action.pi_r,
            lambda: action.lambda,
        };
        self.ledger.mint(request, &competitors)
    }

    /// Reward of `id` as of the current height; `max_height` marks the end
    /// of the run, after which unsettled NFTs report [`RewardStatus::Null`].
    pub fn reward_status(&self, id: NftId, max_height: u64) -> Result<RewardStatus> {
        let nft = self.ledger.get(id)?;
        Ok(match nft.settled_payoff {
            Some(u) => RewardStatus::Settled(u),
            None if self.ledger.height() >= max_height => RewardStatus::Null,
            None => RewardStatus::Pending,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{income, outcome_with_terms};

    fn small_config() -> EnvConfig {
        EnvConfig {
            market: MarketParams {
                n_publishers: 3,
                candidate_size: 4,
                d_hat: 3,
                ..MarketParams::default()
            },
            horizon: 20,
            ..EnvConfig::default()
        }
    }

    fn publish(lambda: f64) -> ActionTuple {
        ActionTuple {
            trigger: true,
            lambda,
            pi_r: 0.0,
            ref_weights: [0.5, 0.5],
            price: 0.3,
        }
    }

    #[test]
    fn empty_ledger_observation_is_all_padding() {
        let cfg = EnvConfig {
            genesis_count: Some(0),
            ..small_config()
        };
        let mut env = Env::new(cfg, 1).unwrap();
        let obs = env.observe(0);
        assert!(obs.mask.iter().all(|v| !v));
        let rows = obs.mask.len() * CANDIDATE_FEATURES;
        assert!(obs.features[..rows].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn maximal_price_scales_to_one() {
        let cfg = EnvConfig {
            genesis_count: Some(0),
            ..small_config()
        };
        let mut env = Env::new(cfg, 1).unwrap();
        env.ledger.seed_genesis(NftKind::Dataset, 0.5, env.config.market.psi_max).unwrap();
        let (rows, _, _) = env.observe(0).decode();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].price, 1.0);
    }

    #[test]
    fn idle_epochs_mint_nothing_and_pay_nothing() {
        let mut env = Env::new(small_config(), 2).unwrap();
        env.observe_all();
        for h in 1..=10 {
            let out = env.step(&[ActionTuple::idle(); 3]).unwrap();
            assert_eq!(out.height, h);
            assert!(out.minted.is_empty());
            assert!(out.settlements.is_empty());
        }
    }

    #[test]
    fn full_down_payment_reward_is_income_minus_p0() {
        let mut env = Env::new(small_config(), 3).unwrap();
        env.observe_all();
        let out = env.step(&[publish(1.0), ActionTuple::idle(), ActionTuple::idle()]).unwrap();
        let (_, id) = out.minted[0];
        let mut settled = None;
        for _ in 0..3 {
            let out = env.step(&[ActionTuple::idle(); 3]).unwrap();
            settled = settled.or(out.settlements.into_iter().find(|e| e.id == id));
        }
        let e = settled.expect("settles at h + d");
        let nft = env.ledger().get(id).unwrap();
        assert_eq!(e.outcome_total, nft.outcome_ledger.p0_total);
        assert_eq!(reward(&e), e.income_total - nft.outcome_ledger.p0_total);
    }

    #[test]
    fn rewards_match_closed_forms() {
        let mut env = Env::new(small_config(), 4).unwrap();
        env.observe_all();
        let mut events = Vec::new();
        for _ in 0..12 {
            let out = env.step(&[publish(0.3), publish(0.6), ActionTuple::idle()]).unwrap();
            events.extend(out.settlements);
        }
        assert!(!events.is_empty());
        let p = env.config().market.clone();
        for e in events {
            let nft = env.ledger().get(e.id).unwrap();
            let cost = outcome_with_terms(&nft.terms, nft.lambda, nft.pi_r, nft.outcome_ledger.p0_total, nft.quality).unwrap();
            let counts: Vec<f64> = nft.referrals.iter().map(|&c| c as f64).collect();
            let inc = income(&p, nft.terms.sigma, nft.terms.d, nft.quality, &counts, nft.bonus_awarded).unwrap();
            let closed = market::payoff(inc.total, cost.total);
            assert!((reward(&e) - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn same_seed_same_ledger() {
        let run = |seed| {
            let mut env = Env::new(small_config(), seed).unwrap();
            env.observe_all();
            for _ in 0..8 {
                env.step(&[publish(0.2), publish(0.2), publish(0.9)]).unwrap();
            }
            env.ledger().nfts().to_vec()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn malformed_actions_degrade_to_no_ops() {
        let mut env = Env::new(small_config(), 5).unwrap();
        env.observe_all();
        let bad = ActionTuple {
            price: 5.0,
            ..publish(0.5)
        };
        let out = env.step(&[bad, publish(0.5), ActionTuple::idle()]).unwrap();
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].publisher, 0);
        assert_eq!(out.minted.len(), 1);
        assert!(env.step(&[ActionTuple::idle(); 2]).is_err());
    }

    #[test]
    fn reward_status_transitions() {
        let mut env = Env::new(small_config(), 6).unwrap();
        env.observe_all();
        let out = env.step(&[publish(0.5), ActionTuple::idle(), ActionTuple::idle()]).unwrap();
        let id = out.minted[0].1;
        assert_eq!(env.reward_status(id, 100).unwrap(), RewardStatus::Pending);
        assert_eq!(env.reward_status(id, 1).unwrap(), RewardStatus::Null);
        for _ in 0..3 {
            env.step(&[ActionTuple::idle(); 3]).unwrap();
        }
        assert!(matches!(env.reward_status(id, 100).unwrap(), RewardStatus::Settled(_)));
    }
}
