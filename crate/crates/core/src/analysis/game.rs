use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{self, MarketParams, WeightVector};

/// Upper bound on joint-profile evaluations for exhaustive searches.
pub const MAX_EVALUATIONS: u128 = 10_000_000;

/// A finite N-player game given by a payoff evaluator over grid indices.
pub trait DiscretizedGame: Sync {
    fn n_players(&self) -> usize;
    fn n_actions(&self, player: usize) -> usize;
    /// Payoff of every player under the pure profile `actions`.
    fn payoffs(&self, actions: &[usize]) -> Vec<f64>;

    fn joint_size(&self) -> u128 {
        (0..self.n_players()).map(|p| self.n_actions(p) as u128).product()
    }
}

/// Probability vector over one player's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Simplex("empty strategy".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Simplex(format!("negative or non-finite entry in {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Simplex(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Normalized counts, as used by fictitious play.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Simplex("counts sum to zero".into()));
        }
        Ok(Self {
            probs: counts.iter().map(|c| c / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_profile<G: DiscretizedGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Result<()> {
    if profile.len() != game.n_players() {
        return Err(Error::Shape {
            what: "strategy profile",
            expected: game.n_players(),
            got: profile.len(),
        });
    }
    for (p, s) in profile.iter().enumerate() {
        if s.len() != game.n_actions(p) {
            return Err(Error::Shape {
                what: "mixed strategy",
                expected: game.n_actions(p),
                got: s.len(),
            });
        }
    }
    let evaluations = game.joint_size();
    if evaluations > MAX_EVALUATIONS {
        return Err(Error::GridTooLarge {
            evaluations,
            bound: MAX_EVALUATIONS,
        });
    }
    Ok(())
}

/// Opponents' joint actions with positive probability, in lexicographic order.
fn opponent_support(profile: &[MixedStrategy], player: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(vec![0usize; profile.len()], 1.0)];
    for (p, s) in profile.iter().enumerate() {
        if p == player {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * s.len());
        for (prefix, w) in &out {
            for (a, &pr) in s.probs().iter().enumerate() {
                if pr > 0.0 {
                    let mut actions = prefix.clone();
                    actions[p] = a;
                    next.push((actions, w * pr));
                }
            }
        }
        out = next;
    }
    out
}

/// Expected payoff of each of `player`'s grid actions against the others.
pub fn action_values<G: DiscretizedGame + ?Sized>(game: &G, player: usize, profile: &[MixedStrategy]) -> Result<Vec<f64>> {
    check_profile(game, profile)?;
    let support = opponent_support(profile, player);
    Ok((0..game.n_actions(player))
        .into_par_iter()
        .map(|a| {
            support
                .iter()
                .map(|(actions, w)| {
                    let mut actions = actions.clone();
                    actions[player] = a;
                    w * game.payoffs(&actions)[player]
                })
                .sum()
        })
        .collect())
}

/// Best grid action against `profile` and its value. Ties go to the lowest index.
pub fn best_response<G: DiscretizedGame + ?Sized>(game: &G, player: usize, profile: &[MixedStrategy]) -> Result<(usize, f64)> {
    let values = action_values(game, player, profile)?;
    let mut best = (0, values[0]);
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (a, v);
        }
    }
    Ok(best)
}

pub fn expected_value<G: DiscretizedGame + ?Sized>(game: &G, player: usize, profile: &[MixedStrategy]) -> Result<f64> {
    let values = action_values(game, player, profile)?;
    Ok(values.iter().zip(profile[player].probs()).map(|(v, p)| v * p).sum())
}

/// Largest gain any single player gets by best-responding.
pub fn exploitability<G: DiscretizedGame + ?Sized>(game: &G, profile: &[MixedStrategy]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for player in 0..game.n_players() {
        let values = action_values(game, player, profile)?;
        let br = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ev: f64 = values.iter().zip(profile[player].probs()).map(|(v, p)| v * p).sum();
        worst = worst.max(br - ev);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FictitiousPlayTrace {
    /// Exploitability of the empirical profile after each iteration.
    pub exploitability: Vec<f64>,
    pub profile: Vec<MixedStrategy>,
}

/// Simultaneous fictitious play from seeded pure starting actions.
pub fn fictitious_play<G: DiscretizedGame + ?Sized>(game: &G, iterations: usize, seed: u64) -> Result<FictitiousPlayTrace> {
    let n = game.n_players();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<Vec<f64>> = (0..n)
        .map(|p| {
            let mut c = vec![0.0; game.n_actions(p)];
            let start = rng.random_range(0..c.len());
            c[start] = 1.0;
            c
        })
        .collect();
    let mut trace = Vec::with_capacity(iterations);
    let mut profile: Vec<MixedStrategy> = counts.iter().map(|c| MixedStrategy::from_counts(c)).collect::<Result<_>>()?;
    for _ in 0..iterations {
        let responses = (0..n).map(|p| best_response(game, p, &profile).map(|r| r.0)).collect::<Result<Vec<_>>>()?;
        for (c, a) in counts.iter_mut().zip(responses) {
            c[a] += 1.0;
        }
        profile = counts.iter().map(|c| MixedStrategy::from_counts(c)).collect::<Result<_>>()?;
        trace.push(exploitability(game, &profile)?);
    }
    Ok(FictitiousPlayTrace {
        exploitability: trace,
        profile,
    })
}

/// Game stored as an explicit payoff table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    actions: Vec<usize>,
    /// Row-major over joint profiles, last player fastest.
    table: Vec<Vec<f64>>,
}

impl TableGame {
    pub fn new(actions: Vec<usize>, table: Vec<Vec<f64>>) -> Result<Self> {
        let size: usize = actions.iter().product();
        if table.len() != size {
            return Err(Error::Shape {
                what: "payoff table",
                expected: size,
                got: table.len(),
            });
        }
        if let Some(row) = table.iter().find(|r| r.len() != actions.len()) {
            return Err(Error::Shape {
                what: "payoff row",
                expected: actions.len(),
                got: row.len(),
            });
        }
        Ok(Self { actions, table })
    }

    /// Tabulates `f` over every joint profile.
    pub fn from_fn<F: Fn(&[usize]) -> Vec<f64>>(actions: Vec<usize>, f: F) -> Result<Self> {
        let size = actions.iter().map(|&a| a as u128).product::<u128>();
        if size > MAX_EVALUATIONS {
            return Err(Error::GridTooLarge {
                evaluations: size,
                bound: MAX_EVALUATIONS,
            });
        }
        let mut table = Vec::with_capacity(size as usize);
        let mut profile = vec![0usize; actions.len()];
        for _ in 0..size {
            table.push(f(&profile));
            for p in (0..actions.len()).rev() {
                profile[p] += 1;
                if profile[p] < actions[p] {
                    break;
                }
                profile[p] = 0;
            }
        }
        Self::new(actions, table)
    }

    fn index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.actions).fold(0, |acc, (a, n)| acc * n + a)
    }
}

impl DiscretizedGame for TableGame {
    fn n_players(&self) -> usize {
        self.actions.len()
    }

    fn n_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    fn payoffs(&self, actions: &[usize]) -> Vec<f64> {
        self.table[self.index(actions)].clone()
    }
}

/// One discretized publishing action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAction {
    pub lambda: f64,
    pub pi_r: f64,
    /// Share of the reference weight given to the dataset slot.
    pub weight: f64,
    pub price: f64,
}

/// Per-player action grid: the product of the level lists, minus
/// combinations with a full down payment and a positive optional payment.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    pub actions: Vec<GridAction>,
}

fn levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ActionGrid {
    pub fn from_levels(lambda: &[f64], pi_r: &[f64], weight: &[f64], price: &[f64]) -> Result<Self> {
        let mut actions = Vec::new();
        for &l in lambda {
            for &p in pi_r {
                if l == 1.0 && p > 0.0 {
                    continue;
                }
                for &w in weight {
                    for &s in price {
                        actions.push(GridAction {
                            lambda: l,
                            pi_r: p,
                            weight: w,
                            price: s,
                        });
                    }
                }
            }
        }
        if actions.is_empty() {
            return Err(Error::config("grid", "no admissible action"));
        }
        Ok(Self { actions })
    }

    /// Evenly spaced levels over each bound: `n` per axis.
    pub fn uniform(params: &MarketParams, n: [usize; 4]) -> Result<Self> {
        Self::from_levels(
            &levels(0.0, 1.0, n[0]),
            &levels(0.0, params.pi_max, n[1]),
            &levels(0.0, 1.0, n[2]),
            &levels(params.psi_min, params.psi_max, n[3]),
        )
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// The pricing game with closed-form payoffs and a deterministic demand
/// model: a player's referrals per round are `demand * epsilon / rank`,
/// where `rank` is one plus the number of players quoting a strictly lower
/// price.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGame {
    pub params: MarketParams,
    pub grid: ActionGrid,
    pub n_players: usize,
    /// Own-resource quality of each player.
    pub base_quality: Vec<f64>,
    /// Quality and price of the dataset and model references on offer.
    pub ref_quality: [f64; 2],
    pub ref_price: [f64; 2],
    pub demand: f64,
}

impl MarketGame {
    pub fn new(params: MarketParams, grid: ActionGrid, base_quality: Vec<f64>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            n_players: base_quality.len(),
            params,
            grid,
            base_quality,
            ref_quality: [0.5, 0.5],
            ref_price: [0.5, 0.5],
            demand: 1.0,
        })
    }

    fn quality(&self, player: usize, a: &GridAction) -> Result<(f64, f64)> {
        let share = 1.0 - self.params.w0;
        let w = WeightVector::new(self.params.w0, vec![share * a.weight, share * (1.0 - a.weight)])?;
        let eps = market::quality(&w, &self.ref_quality, self.base_quality[player])?;
        let topup = market::topup_fee(&w, &self.ref_price)?;
        let (p0, _) = market::base_price(&self.params, topup, &w)?;
        Ok((eps, p0))
    }

    fn try_payoffs(&self, actions: &[usize]) -> Result<Vec<f64>> {
        let chosen: Vec<&GridAction> = actions.iter().map(|&i| &self.grid.actions[i]).collect();
        let q: Vec<(f64, f64)> = chosen.iter().enumerate().map(|(p, a)| self.quality(p, a)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.n_players);
        for (p, a) in chosen.iter().enumerate() {
            let (eps, p0) = q[p];
            let rank = 1 + chosen.iter().filter(|o| o.price < a.price).count();
            let terms = market::derive_terms(&self.params, a.lambda, a.pi_r)?;
            let counts = vec![self.demand * eps / rank as f64; terms.d as usize];
            let bonus = q.iter().enumerate().all(|(o, (e, _))| o == p || eps > *e);
            let income = market::income(&self.params, terms.sigma, terms.d, eps, &counts, bonus)?;
            let cost = market::outcome_with_terms(&terms, a.lambda, a.pi_r, p0, eps)?;
            out.push(market::payoff(income.total, cost.total));
        }
        Ok(out)
    }
}

impl DiscretizedGame for MarketGame {
    fn n_players(&self) -> usize {
        self.n_players
    }

    fn n_actions(&self, _player: usize) -> usize {
        self.grid.len()
    }

    fn payoffs(&self, actions: &[usize]) -> Vec<f64> {
        // Grid actions are admissible by construction.
        self.try_payoffs(actions).expect("grid action outside the market bounds")
    }
}
