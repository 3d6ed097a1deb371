use rayon::prelude::*;

use crate::error::Result;
use crate::market::{self, DerivedTerms, MarketParams};

pub const FD_STEP: f64 = 1e-4;
pub const WITNESS_THRESHOLD: f64 = -1e-8;

/// Second derivatives `(A, B, C) = (U_xx, U_xy, U_yy)` by central differences.
pub fn hessian_2d<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, h: f64) -> (f64, f64, f64) {
    let f0 = f(x, y);
    let a = (f(x + h, y) - 2.0 * f0 + f(x - h, y)) / (h * h);
    let c = (f(x, y + h) - 2.0 * f0 + f(x, y - h)) / (h * h);
    let b = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    (a, b, c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub sigma: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Witness {
    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

/// Rectangular grid over `(sigma, q)`, both axes inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessGrid {
    pub sigma: (f64, f64),
    pub q: (f64, f64),
    pub points: usize,
}

impl WitnessGrid {
    pub fn for_params(params: &MarketParams, points: usize) -> Self {
        Self {
            sigma: (params.sigma_floor, 1.0),
            q: (0.0, 1.0),
            points,
        }
    }

    fn axis(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n == 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Point `idx` in row-major order, sigma varying slowest.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.points, idx % self.points);
        (Self::axis(self.sigma, self.points, i), Self::axis(self.q, self.points, j))
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub grid: WitnessGrid,
    pub witness: Option<Witness>,
    /// Points where the evaluator or a difference was not finite.
    pub excluded: Vec<(f64, f64)>,
    /// Number of points with `AC - B^2` below the threshold.
    pub negative_points: usize,
}

/// Scans the grid and returns the first point (in grid order) whose Hessian
/// determinant falls below [`WITNESS_THRESHOLD`].
pub fn nonconvexity_witness<F>(f: &F, grid: &WitnessGrid) -> WitnessReport
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let results: Vec<Option<Witness>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (sigma, q) = grid.point(idx);
            let (a, b, c) = hessian_2d(f, sigma, q, FD_STEP);
            [a, b, c]
                .iter()
                .all(|v| v.is_finite())
                .then_some(Witness { sigma, q, a, b, c })
        })
        .collect();
    let mut report = WitnessReport {
        grid: *grid,
        witness: None,
        excluded: Vec::new(),
        negative_points: 0,
    };
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            None => report.excluded.push(grid.point(idx)),
            Some(w) if w.determinant() < WITNESS_THRESHOLD => {
                report.negative_points += 1;
                report.witness.get_or_insert(w);
            }
            Some(_) => {}
        }
    }
    report
}

/// Closed-form payoff of one NFT as a function of `(sigma, q)` with every
/// other input held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSurface {
    pub params: MarketParams,
    pub d: u32,
    pub lambda: f64,
    pub pi_r: f64,
    pub p0_total: f64,
    pub epsilon: f64,
    /// Referrals per income round.
    pub referrals: f64,
    pub bonus: bool,
}

impl PayoffSurface {
    /// Half down payment, no optional payment, quality 0.5, one referral per
    /// round and a base price of `fixed_expense + psi_max / 2`.
    pub fn default_for(params: &MarketParams) -> Self {
        Self {
            d: params.d_hat,
            lambda: 0.5,
            pi_r: 0.0,
            p0_total: params.fixed_expense + params.psi_max / 2.0,
            epsilon: 0.5,
            referrals: 1.0,
            bonus: false,
            params: params.clone(),
        }
    }

    pub fn payoff(&self, sigma: f64, q: f64) -> Result<f64> {
        let terms = DerivedTerms {
            d: self.d,
            growth: 1.0 + q,
            sigma,
        };
        let cost = market::outcome_with_terms(&terms, self.lambda, self.pi_r, self.p0_total, self.epsilon)?;
        let counts = vec![self.referrals; self.d as usize];
        let inc = market::income(&self.params, sigma, self.d, self.epsilon, &counts, self.bonus)?;
        Ok(market::payoff(inc.total, cost.total))
    }

    /// Evaluator for [`nonconvexity_witness`]; domain errors become NaN.
    pub fn evaluator(&self) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
        move |sigma, q| self.payoff(sigma, q).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> WitnessGrid {
        WitnessGrid {
            sigma: (0.05, 1.0),
            q: (0.0, 1.0),
            points: 101,
        }
    }

    #[test]
    fn quadratic_form_coefficients_are_recovered() {
        let f = |x: f64, y: f64| 1.5 * x * x + 0.75 * x * y - 2.0 * y * y + x - 3.0;
        for (x, y) in [(0.1, 0.2), (0.9, 0.4), (-0.5, 0.7)] {
            let (a, b, c) = hessian_2d(&f, x, y, FD_STEP);
            assert!((a - 3.0).abs() < 1e-5 && (b - 0.75).abs() < 1e-5 && (c + 4.0).abs() < 1e-5, "{a} {b} {c}");
        }
    }

    #[test]
    fn saddle_yields_witness_at_first_point() {
        let r = nonconvexity_witness(&|s: f64, q: f64| s * q, &unit_grid());
        let w = r.witness.unwrap();
        assert_eq!((w.sigma, w.q), (0.05, 0.0));
        assert!((w.determinant() + 1.0).abs() < 1e-5);
        assert_eq!(r.negative_points, unit_grid().len());
    }

    #[test]
    fn convex_control_has_no_witness() {
        let r = nonconvexity_witness(&|s: f64, q: f64| -s * s - q * q, &unit_grid());
        assert!(r.witness.is_none());
        assert!(r.excluded.is_empty());
    }

    #[test]
    fn non_finite_points_are_excluded() {
        let grid = WitnessGrid {
            sigma: (0.0, 1.0),
            q: (0.0, 1.0),
            points: 3,
        };
        let r = nonconvexity_witness(&|s: f64, _q: f64| 1.0 / s, &grid);
        assert_eq!(r.excluded.len(), 3);
    }

    #[test]
    fn default_payoff_surface_is_not_convex() {
        let p = MarketParams::default();
        let surface = PayoffSurface::default_for(&p);
        let r = nonconvexity_witness(&surface.evaluator(), &WitnessGrid::for_params(&p, 101));
        assert!(r.witness.is_some());
    }
}
