use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::{Env, Transition};
use crate::error::Result;
use crate::learner::{Learner, PpoAgent};

/// One publisher decision: a settled payoff at its settlement epoch, zero
/// for an epoch without a mint, or null for an NFT still unsettled at the
/// horizon (placed at its mint epoch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCell {
    pub seed: u64,
    pub epoch: u64,
    pub publisher: usize,
    pub raw: Option<f64>,
    pub norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardSeries {
    pub cells: Vec<RewardCell>,
}

/// Per-run statistics that do not fit in the cells.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub minted: usize,
    pub settled: usize,
    pub unsettled: usize,
    pub rejected: usize,
    pub updates: usize,
}

fn agent_seed(seed: u64, publisher: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(publisher as u64 + 1)
}

/// Plays one seed of the game with one learner per publisher.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<(Vec<RewardCell>, RunStats)> {
    config.validate()?;
    let env_config = config.env_config()?;
    let obs_len = env_config.observation_len();
    let mut env = Env::new(env_config, seed)?;
    let market = config.market();
    let mut agents: Vec<PpoAgent> = (0..config.n_publishers)
        .map(|p| PpoAgent::new(obs_len, market.clone(), config.learner(), agent_seed(seed, p)))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(config.n_publishers * config.epochs as usize);
    let mut stats = RunStats::default();
    let mut mint_epoch = std::collections::BTreeMap::new();
    let mut observations = env.observe_all();

    for epoch in 1..=config.epochs {
        let steps: Vec<_> = agents.iter_mut().zip(&observations).map(|(a, o)| a.act(o)).collect();
        let actions: Vec<_> = steps.iter().map(|s| s.action).collect();
        let outcome = env.step(&actions)?;
        debug_assert_eq!(outcome.height, epoch);
        stats.rejected += outcome.rejected.len();

        let mut minted_by = vec![None; agents.len()];
        for &(p, id) in &outcome.minted {
            minted_by[p] = Some(id);
        }
        for (p, step) in steps.into_iter().enumerate() {
            let transition = Transition {
                tx_id: minted_by[p],
                state: observations[p].clone(),
                next_state: outcome.next_observations[p].clone(),
                action: step.action,
                sample: step.sample,
                log_prob: step.log_prob,
                outcome_total: 0.0,
                income_total: 0.0,
            };
            match minted_by[p] {
                Some(id) => {
                    stats.minted += 1;
                    mint_epoch.insert(id, (p, epoch));
                    agents[p].defer(id, transition);
                }
                None => {
                    agents[p].record(transition);
                    cells.push(RewardCell {
                        seed,
                        epoch,
                        publisher: p,
                        raw: Some(0.0),
                        norm: None,
                    });
                }
            }
        }
        for e in &outcome.settlements {
            let p = e.publisher.expect("environment reports publisher settlements only");
            agents[p].settle(e.id, e.income_total, e.outcome_total);
            mint_epoch.remove(&e.id);
            stats.settled += 1;
            cells.push(RewardCell {
                seed,
                epoch: e.height,
                publisher: p,
                raw: Some(e.payoff),
                norm: None,
            });
        }
        stats.updates += agents.par_iter_mut().map(|a| a.update().is_some() as usize).sum::<usize>();
        observations = outcome.next_observations;
    }
    for (p, epoch) in mint_epoch.into_values() {
        stats.unsettled += 1;
        cells.push(RewardCell {
            seed,
            epoch,
            publisher: p,
            raw: None,
            norm: None,
        });
    }
    cells.sort_by_key(|c| (c.epoch, c.publisher));
    Ok((cells, stats))
}

/// Runs every seed of `config` and normalizes each seed separately.
pub fn run(config: &ExperimentConfig) -> Result<RewardSeries> {
    run_with_stats(config).map(|(s, _)| s)
}

pub fn run_with_stats(config: &ExperimentConfig) -> Result<(RewardSeries, Vec<RunStats>)> {
    config.validate()?;
    let per_seed: Vec<(Vec<RewardCell>, RunStats)> =
        config.seeds.par_iter().map(|&s| run_seed(config, s)).collect::<Result<_>>()?;
    let mut series = RewardSeries::default();
    let mut stats = Vec::with_capacity(per_seed.len());
    for (cells, st) in per_seed {
        series.cells.extend(cells);
        stats.push(st);
    }
    Ok((normalize(&series), stats))
}

/// Max-abs normalization of raw rewards within each seed. Nulls stay null;
/// a seed whose rewards are all zero normalizes to zeros.
pub fn normalize(series: &RewardSeries) -> RewardSeries {
    let mut scale = std::collections::BTreeMap::<u64, f64>::new();
    for c in &series.cells {
        let m = scale.entry(c.seed).or_insert(0.0);
        if let Some(r) = c.raw {
            *m = m.max(r.abs());
        }
    }
    RewardSeries {
        cells: series
            .cells
            .iter()
            .map(|c| RewardCell {
                norm: c.raw.map(|r| {
                    let m = scale[&c.seed];
                    if m > 0.0 {
                        (r / m).clamp(-1.0, 1.0)
                    } else {
                        0.0
                    }
                }),
                ..*c
            })
            .collect(),
    }
}

/// Re-applies normalization to already-normalized values, treating them as
/// raw. Used to state idempotence.
pub fn renormalize(series: &RewardSeries) -> RewardSeries {
    let as_raw = RewardSeries {
        cells: series.cells.iter().map(|c| RewardCell { raw: c.norm, ..*c }).collect(),
    };
    normalize(&as_raw)
}
