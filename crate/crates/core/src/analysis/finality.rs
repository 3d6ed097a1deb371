use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ledger::{Ledger, MintRequest, NftKind, Reference};
use crate::market::{MarketParams, WeightVector};

/// A failed check, named by the `(sigma, d)` pair that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub sigma: f64,
    pub d: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalityReport {
    pub lifecycles: usize,
    pub geometric_pairs: usize,
    /// Largest relative gap between the partial sum and its closed form.
    pub max_geometric_error: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl FinalityReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

pub const GEOMETRIC_TOLERANCE: f64 = 1e-12;

/// `sum_{i=0..d} sigma^i` by direct accumulation.
pub fn geometric_partial_sum(sigma: f64, d: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..=d {
        sum += term;
        term *= sigma;
    }
    sum
}

/// `(1 - sigma^(d+1)) / (1 - sigma)`.
pub fn geometric_closed_form(sigma: f64, d: u32) -> f64 {
    (1.0 - sigma.powi(d as i32 + 1)) / (1.0 - sigma)
}

/// Relative error of the closed form against accumulation.
pub fn geometric_error(sigma: f64, d: u32) -> f64 {
    let direct = geometric_partial_sum(sigma, d);
    (direct - geometric_closed_form(sigma, d)).abs() / direct.abs()
}

/// Mints one publisher NFT and a stream of referencing NFTs, then runs the
/// ledger well past `h + d`. Returns a description of the first violation.
fn check_lifecycle(params: MarketParams, rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let mut ledger = Ledger::new(params)?;
    let mut genesis = Vec::new();
    for kind in [NftKind::Dataset, NftKind::Model] {
        genesis.push(ledger.seed_genesis(kind, rng.random_range(0.0..1.0), rng.random_range(0.01..1.0))?);
    }
    let lambda: f64 = if rng.random_bool(0.2) { 1.0 } else { rng.random_range(0.0..1.0) };
    let pi_r = if lambda < 1.0 { rng.random_range(0.0..=ledger.params().pi_max) } else { 0.0 };
    let raw = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
    let weights = WeightVector::normalized(ledger.params().w0, &raw)?;
    let target = ledger.mint(
        MintRequest {
            publisher: Some(0),
            kind: NftKind::Composite,
            theta: vec![
                Reference {
                    id: genesis[0],
                    slot: NftKind::Dataset,
                },
                Reference {
                    id: genesis[1],
                    slot: NftKind::Model,
                },
            ],
            weights,
            quality: rng.random_range(0.0..1.0),
            price: rng.random_range(0.01..1.0),
            pi_r,
            lambda,
        },
        &[],
    )?;
    let nft = ledger.get(target)?.clone();
    let (h, d) = (nft.height, nft.terms.d);
    let mut settled_at = None;
    let mut snapshot = None;
    for height in 1..=h + d as u64 + 5 {
        if height > 1 && !ledger.get(target)?.settled && rng.random_bool(0.5) {
            // A later NFT citing the target while it is still live.
            ledger.mint(
                MintRequest {
                    publisher: Some(1),
                    kind: NftKind::Composite,
                    theta: vec![Reference {
                        id: target,
                        slot: NftKind::Dataset,
                    }],
                    weights: WeightVector::normalized(ledger.params().w0, &[1.0])?,
                    quality: rng.random_range(0.0..1.0),
                    price: rng.random_range(0.01..1.0),
                    pi_r: 0.0,
                    lambda: 0.5,
                },
                &[],
            )?;
        }
        for e in ledger.advance_round(height)? {
            if e.id == target {
                settled_at = Some(e.height);
            }
        }
        let now = ledger.get(target)?;
        if height == h + d as u64 {
            snapshot = Some((now.income_ledger.clone(), now.outcome_ledger.clone()));
        }
        if height > h + d as u64 {
            let (inc, out) = snapshot.as_ref().unwrap();
            if &now.income_ledger != inc || &now.outcome_ledger != out {
                return Ok(Some(format!("ledger entry of {target} changed at height {height}, past h + d = {}", h + d as u64)));
            }
        }
    }
    let now = ledger.get(target)?;
    if settled_at != Some(h + d as u64) {
        return Ok(Some(format!("settled at {settled_at:?}, expected {}", h + d as u64)));
    }
    if now.income_ledger.per_round.len() != d as usize {
        return Ok(Some(format!("{} income rounds for d = {d}", now.income_ledger.per_round.len())));
    }
    let expected_installments = if lambda < 1.0 { d as usize } else { 0 };
    if now.outcome_ledger.installments.len() != expected_installments {
        return Ok(Some(format!("{} installments for d = {d}", now.outcome_ledger.installments.len())));
    }
    if let Some(r) = now.income_ledger.per_round.iter().find(|r| r.round < 1 || r.round > d) {
        return Ok(Some(format!("income booked for round {}", r.round)));
    }
    Ok(None)
}

/// Runs `trials` randomized lifecycles around `base` and checks the
/// geometric identity for `trials` random `(sigma, d)` pairs.
pub fn verify_finality(base: &MarketParams, trials: usize, seed: u64) -> Result<FinalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let params = MarketParams {
            q_hat: rng.random_range(0.0..0.5),
            sigma_hat: rng.random_range(0.05..0.99),
            d_hat: rng.random_range(1..=15),
            ..base.clone()
        };
        let (sigma, d_hat) = (params.sigma_hat, params.d_hat);
        if let Some(detail) = check_lifecycle(params, &mut rng)? {
            counterexamples.push(Counterexample { sigma, d: d_hat, detail });
        }
    }
    let mut max_geometric_error: f64 = 0.0;
    for _ in 0..trials {
        let sigma = rng.random_range(0.01..0.99);
        let d = rng.random_range(1..=60);
        let err = geometric_error(sigma, d);
        max_geometric_error = max_geometric_error.max(err);
        if !(err <= GEOMETRIC_TOLERANCE) {
            counterexamples.push(Counterexample {
                sigma,
                d,
                detail: format!("geometric sum relative error {err:e}"),
            });
        }
    }
    Ok(FinalityReport {
        lifecycles: trials,
        geometric_pairs: trials,
        max_geometric_error,
        counterexamples,
    })
}
