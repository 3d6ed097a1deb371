//! Closed-form pricing of a referable NFT: parameter maps, base price,
//! compound-interest cost, descending income, quality and payoff.
//!
//! Everything here is a pure function of its arguments.

mod params;
mod weights;

pub use params::{DecayMode, MarketParams};
pub use weights::{WeightVector, SIMPLEX_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay horizon, interest growth factor `1 + q` and descending rate after
/// the optional payment has been applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedTerms {
    pub d: u32,
    pub growth: f64,
    pub sigma: f64,
}

fn check_unit(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            value,
            bound: "[0, 1]",
        })
    }
}

fn check_pi_r(params: &MarketParams, pi_r: f64) -> Result<()> {
    if !(pi_r >= 0.0) {
        return Err(Error::Domain {
            field: "pi_r",
            value: pi_r,
            bound: "lower bound 0",
        });
    }
    if pi_r > params.pi_max {
        return Err(Error::Domain {
            field: "pi_r",
            value: pi_r,
            bound: "upper bound pi_max",
        });
    }
    Ok(())
}

/// Maps the optional payment onto `(d, 1 + q, sigma)`.
///
/// `d = d_hat + floor(kappa_d * pi_r)`, `1 + q = 1 + q_hat * exp(-kappa_q * pi_r)`,
/// `sigma = max(sigma_floor, sigma_hat * exp(-kappa_sigma * pi_r))`.
pub fn map_params(params: &MarketParams, pi_r: f64) -> Result<DerivedTerms> {
    check_pi_r(params, pi_r)?;
    Ok(terms_from_base(params, params.d_hat, pi_r))
}

/// Like [`map_params`] but honours [`DecayMode`], which may tie the base
/// horizon to the down-payment ratio.
pub fn derive_terms(params: &MarketParams, lambda: f64, pi_r: f64) -> Result<DerivedTerms> {
    check_unit("lambda", lambda)?;
    check_pi_r(params, pi_r)?;
    let base = match params.decay_mode {
        DecayMode::Constant => params.d_hat,
        DecayMode::LinearInRemainder => ((params.d_hat as f64 * (1.0 - lambda)).ceil() as u32).max(1),
    };
    Ok(terms_from_base(params, base, pi_r))
}

fn terms_from_base(params: &MarketParams, d_base: u32, pi_r: f64) -> DerivedTerms {
    let extra = (params.kappa_d * pi_r).floor() as u32;
    DerivedTerms {
        d: d_base + extra,
        growth: 1.0 + params.q_hat * (-params.kappa_q * pi_r).exp(),
        sigma: (params.sigma_hat * (-params.kappa_sigma * pi_r).exp()).max(params.sigma_floor),
    }
}

/// Scalar base price `fixed_expense + topup` and its split by weight.
pub fn base_price(params: &MarketParams, topup: f64, weights: &WeightVector) -> Result<(f64, Vec<f64>)> {
    if !(topup >= 0.0) || !topup.is_finite() {
        return Err(Error::Domain {
            field: "topup",
            value: topup,
            bound: "finite and >= 0",
        });
    }
    let p0_total = params.fixed_expense + topup;
    let shares = weights.components().map(|w| p0_total * w).collect();
    Ok((p0_total, shares))
}

/// Top-up fee for a reference list: each weight times the referenced unit price.
pub fn topup_fee(weights: &WeightVector, ref_prices: &[f64]) -> Result<f64> {
    if weights.refs().len() != ref_prices.len() {
        return Err(Error::Shape {
            what: "reference prices",
            expected: weights.refs().len(),
            got: ref_prices.len(),
        });
    }
    Ok(weights.refs().iter().zip(ref_prices).map(|(w, p)| w * p).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Installment {
    /// Rounds after the mint, starting at 1.
    pub round: u32,
    pub amount: f64,
}

/// Everything a publisher pays for one NFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub p0_total: f64,
    pub down_payment: f64,
    pub pi_r: f64,
    pub installments: Vec<Installment>,
    pub total: f64,
}

/// Amount of installment `round` on the unpaid remainder.
pub fn installment_amount(terms: &DerivedTerms, lambda: f64, p0_total: f64, epsilon: f64, round: u32) -> f64 {
    terms.growth.powf(round as f64 - epsilon) * p0_total * (1.0 - lambda) / terms.d as f64
}

/// Cost of an NFT with compound interest on the deferred part of `p0_total`.
pub fn outcome(params: &MarketParams, lambda: f64, pi_r: f64, p0_total: f64, epsilon: f64) -> Result<CostBreakdown> {
    let terms = map_params(params, pi_r)?;
    outcome_with_terms(&terms, lambda, pi_r, p0_total, epsilon)
}

/// [`outcome`] with the derived terms supplied by the caller.
pub fn outcome_with_terms(
    terms: &DerivedTerms,
    lambda: f64,
    pi_r: f64,
    p0_total: f64,
    epsilon: f64,
) -> Result<CostBreakdown> {
    check_unit("lambda", lambda)?;
    check_unit("epsilon", epsilon)?;
    if !(pi_r >= 0.0) {
        return Err(Error::Domain {
            field: "pi_r",
            value: pi_r,
            bound: "lower bound 0",
        });
    }
    if lambda == 1.0 {
        if pi_r > 0.0 {
            return Err(Error::InconsistentAction(format!(
                "pi_r = {pi_r} with lambda = 1: a full down payment costs exactly p0"
            )));
        }
        return Ok(CostBreakdown {
            p0_total,
            down_payment: p0_total,
            pi_r: 0.0,
            installments: Vec::new(),
            total: p0_total,
        });
    }
    let down_payment = lambda * p0_total;
    let installments: Vec<Installment> = (1..=terms.d)
        .map(|round| Installment {
            round,
            amount: installment_amount(terms, lambda, p0_total, epsilon, round),
        })
        .collect();
    let total = down_payment + pi_r + installments.iter().map(|i| i.amount).sum::<f64>();
    Ok(CostBreakdown {
        p0_total,
        down_payment,
        pi_r,
        installments,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeRound {
    pub round: u32,
    pub referrals: f64,
    pub amount: f64,
}

/// Everything an NFT earns over its lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeBreakdown {
    pub per_round: Vec<IncomeRound>,
    pub bonus: f64,
    pub total: f64,
}

/// Income of round `round`: `k * sigma^-round * referrals * epsilon`.
pub fn income_amount(k: f64, sigma: f64, epsilon: f64, round: u32, referrals: f64) -> f64 {
    k * sigma.powi(-(round as i32)) * referrals * epsilon
}

/// Income from `referral_counts[j-1]` referrals in round `j`, plus the bonus.
///
/// Counts are real so expected referrals can be priced as well as realised ones.
pub fn income(
    params: &MarketParams,
    sigma: f64,
    d: u32,
    epsilon: f64,
    referral_counts: &[f64],
    bonus_awarded: bool,
) -> Result<IncomeBreakdown> {
    check_unit("epsilon", epsilon)?;
    if referral_counts.len() != d as usize {
        return Err(Error::Shape {
            what: "referral counts",
            expected: d as usize,
            got: referral_counts.len(),
        });
    }
    let per_round: Vec<IncomeRound> = referral_counts
        .iter()
        .zip(1..=d)
        .map(|(&referrals, round)| IncomeRound {
            round,
            referrals,
            amount: income_amount(params.k, sigma, epsilon, round, referrals),
        })
        .collect();
    let bonus = if bonus_awarded { params.fixed_reward } else { 0.0 };
    let total = bonus + per_round.iter().map(|r| r.amount).sum::<f64>();
    Ok(IncomeBreakdown { per_round, bonus, total })
}

/// Net payoff of a publisher for one NFT.
pub fn payoff(income_total: f64, outcome_total: f64) -> f64 {
    income_total - outcome_total
}

/// Income coefficient of a new NFT: the weight-averaged quality of its own
/// resource and of the resources it references.
pub fn quality(weights: &WeightVector, ref_qualities: &[f64], base_quality: f64) -> Result<f64> {
    if ref_qualities.len() != weights.refs().len() {
        return Err(Error::Shape {
            what: "reference qualities",
            expected: weights.refs().len(),
            got: ref_qualities.len(),
        });
    }
    check_unit("base_quality", base_quality)?;
    for &q in ref_qualities {
        check_unit("ref_quality", q)?;
    }
    let eps = weights.w0() * base_quality
        + weights
            .refs()
            .iter()
            .zip(ref_qualities)
            .map(|(w, q)| w * q)
            .sum::<f64>();
    Ok(eps.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MarketParams {
        MarketParams::default()
    }

    #[test]
    fn maps_are_anchored_at_zero_payment() {
        let p = params();
        let t = map_params(&p, 0.0).unwrap();
        assert_eq!(t.d, p.d_hat);
        assert_eq!(t.growth, 1.0 + p.q_hat);
        assert_eq!(t.sigma, p.sigma_hat);
    }

    #[test]
    fn maps_move_in_the_stated_directions_at_the_cap() {
        let p = params();
        let zero = map_params(&p, 0.0).unwrap();
        let cap = map_params(&p, p.pi_max).unwrap();
        assert!(cap.d > zero.d);
        assert!(cap.growth < zero.growth);
        assert!(cap.sigma < zero.sigma);
    }

    #[test]
    fn growth_at_ln2_halves_the_interest() {
        let p = MarketParams {
            q_hat: 0.01,
            kappa_q: 1.0,
            pi_max: 1.0,
            ..params()
        };
        let t = map_params(&p, std::f64::consts::LN_2).unwrap();
        // 1 + 0.01 * exp(-ln 2) evaluated by hand.
        assert!((t.growth - 1.005).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_payment_names_the_bound() {
        let p = params();
        let err = map_params(&p, p.pi_max + 0.1).unwrap_err();
        assert!(err.to_string().contains("pi_max"), "{err}");
        let err = map_params(&p, -0.1).unwrap_err();
        assert!(err.to_string().contains("lower bound"), "{err}");
    }

    #[test]
    fn linear_decay_mode_shortens_the_horizon() {
        let p = MarketParams {
            decay_mode: DecayMode::LinearInRemainder,
            ..params()
        };
        assert_eq!(derive_terms(&p, 0.0, 0.0).unwrap().d, 10);
        assert_eq!(derive_terms(&p, 0.5, 0.0).unwrap().d, 5);
        assert_eq!(derive_terms(&p, 1.0, 0.0).unwrap().d, 1);
        let constant = params();
        assert_eq!(derive_terms(&constant, 0.5, 0.0).unwrap().d, 10);
    }

    #[test]
    fn base_price_without_references() {
        let p = params();
        let (total, shares) = base_price(&p, 0.0, &WeightVector::self_only()).unwrap();
        assert_eq!(total, p.fixed_expense);
        assert_eq!(shares, vec![p.fixed_expense]);
    }

    #[test]
    fn base_price_splits_by_weight() {
        let p = MarketParams {
            fixed_expense: 0.1,
            ..params()
        };
        let w = WeightVector::new(0.2, vec![0.5, 0.3]).unwrap();
        let (total, shares) = base_price(&p, 0.9, &w).unwrap();
        assert!((total - 1.0).abs() < 1e-15);
        for (s, e) in shares.iter().zip([0.2, 0.5, 0.3]) {
            assert!((s - e).abs() < 1e-15);
        }
        assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_down_payment_costs_exactly_p0() {
        let p = params();
        let c = outcome(&p, 1.0, 0.0, 0.37, 0.4).unwrap();
        assert_eq!(c.total, 0.37);
        assert!(c.installments.is_empty());
        assert!(matches!(
            outcome(&p, 1.0, 0.1, 0.37, 0.4),
            Err(Error::InconsistentAction(_))
        ));
    }

    #[test]
    fn interest_free_installments_split_evenly() {
        let p = MarketParams {
            q_hat: 0.0,
            d_hat: 2,
            ..params()
        };
        let c = outcome(&p, 0.0, 0.0, 1.0, 0.0).unwrap();
        let amounts: Vec<f64> = c.installments.iter().map(|i| i.amount).collect();
        assert_eq!(amounts, vec![0.5, 0.5]);
        assert_eq!(c.total, 1.0);
    }

    #[test]
    fn compound_installments_match_term_by_term_sum() {
        let terms = DerivedTerms {
            d: 2,
            growth: 1.1,
            sigma: 0.9,
        };
        let c = outcome_with_terms(&terms, 0.5, 0.0, 1.0, 0.5).unwrap();
        // 0.5 + 0.25 * (1.1^0.5 + 1.1^1.5), evaluated independently.
        let expected = 0.5 + 0.25 * (1.1f64.sqrt() + 1.1 * 1.1f64.sqrt());
        assert!((c.total - expected).abs() < 1e-12);

        let p = MarketParams { k: 1.0, ..params() };
        let inc = income(&p, 0.5, 2, 1.0, &[1.0, 2.0], false).unwrap();
        assert!((payoff(inc.total, c.total) - (10.0 - expected)).abs() < 1e-12);
    }

    #[test]
    fn income_edge_cases() {
        let p = params();
        assert_eq!(income(&p, 0.5, 2, 0.0, &[3.0, 4.0], false).unwrap().total, 0.0);
        assert_eq!(income(&p, 0.5, 2, 0.7, &[0.0, 0.0], true).unwrap().total, p.fixed_reward);
        assert!(matches!(income(&p, 0.5, 3, 0.7, &[0.0, 0.0], true), Err(Error::Shape { .. })));
    }

    #[test]
    fn income_worked_example() {
        let p = MarketParams { k: 1.0, ..params() };
        let inc = income(&p, 0.5, 2, 1.0, &[1.0, 2.0], false).unwrap();
        assert_eq!(inc.total, 10.0);
        assert_eq!(inc.per_round.len(), 2);
    }

    #[test]
    fn payoff_is_income_minus_outcome() {
        assert_eq!(payoff(10.0, 10.0), 0.0);
        let p = params();
        let inc = income(&p, 0.9, 3, 0.5, &[0.0; 3], true).unwrap();
        let out = outcome(&p, 1.0, 0.0, 0.25, 0.5).unwrap();
        assert_eq!(payoff(inc.total, out.total), p.fixed_reward - 0.25);
    }

    #[test]
    fn quality_examples() {
        assert_eq!(quality(&WeightVector::self_only(), &[], 0.7).unwrap(), 0.7);
        let w = WeightVector::new(0.2, vec![0.5, 0.3]).unwrap();
        assert!((quality(&w, &[1.0, 1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((quality(&w, &[0.8, 0.4], 0.5).unwrap() - 0.62).abs() < 1e-15);
        assert!(matches!(quality(&w, &[0.8], 0.5), Err(Error::Shape { .. })));
    }
}
