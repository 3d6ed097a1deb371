use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{normalize, run_seed, RewardCell, RewardSeries, RunStats};
use crate::error::Result;

/// Length of the final window the summaries look at.
pub const FINAL_WINDOW: u64 = 10;
/// Normalized rewards beyond this magnitude count as outliers.
pub const OUTLIER_BOUND: f64 = 0.9;

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    /// Non-null normalized values in the window.
    pub count: usize,
    pub nulls: usize,
    pub median: f64,
    pub iqr: f64,
    /// Share of all window cells (nulls included) with a raw reward of zero.
    pub zero_fraction: f64,
    /// Share of non-null values with `|norm| > OUTLIER_BOUND`.
    pub outside_fraction: f64,
}

/// Statistics of the cells with `epoch > epochs - FINAL_WINDOW`.
pub fn summarize<'a, I: IntoIterator<Item = &'a RewardCell>>(cells: I, epochs: u64) -> WindowSummary {
    let start = epochs.saturating_sub(FINAL_WINDOW);
    let mut values = Vec::new();
    let (mut total, mut nulls, mut zeros) = (0usize, 0usize, 0usize);
    for c in cells.into_iter().filter(|c| c.epoch > start) {
        total += 1;
        match (c.raw, c.norm) {
            (Some(r), Some(n)) => {
                values.push(n);
                if r == 0.0 {
                    zeros += 1;
                }
            }
            _ => nulls += 1,
        }
    }
    values.sort_by(f64::total_cmp);
    let outside = values.iter().filter(|v| v.abs() > OUTLIER_BOUND).count();
    WindowSummary {
        count: values.len(),
        nulls,
        median: quantile(&values, 0.5),
        iqr: quantile(&values, 0.75) - quantile(&values, 0.25),
        zero_fraction: if total > 0 { zeros as f64 / total as f64 } else { f64::NAN },
        outside_fraction: if values.is_empty() { f64::NAN } else { outside as f64 / values.len() as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub config: ExperimentConfig,
    pub series: RewardSeries,
    pub stats: Vec<RunStats>,
    /// Pooled over publishers and seeds.
    pub summary: WindowSummary,
    /// One entry per seed, in `config.seeds` order.
    pub per_seed: Vec<WindowSummary>,
}

/// Runs `base` once per value of `axis`, every seed each time. Runs are
/// spread over the rayon pool; results come back in input order.
pub fn sweep(base: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let configs: Vec<ExperimentConfig> = values.iter().map(|&v| base.with_axis(axis, v)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(Vec<RewardCell>, RunStats)> =
        jobs.par_iter().map(|&(i, s)| run_seed(&configs[i], s)).collect::<Result<_>>()?;
    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(configs.len());
    for (config, &axis_value) in configs.into_iter().zip(values) {
        let mut raw = RewardSeries::default();
        let mut stats = Vec::new();
        for _ in &config.seeds {
            let (cells, st) = results.next().expect("one result per job");
            raw.cells.extend(cells);
            stats.push(st);
        }
        let series = normalize(&raw);
        points.push(point(config, axis_value, series, stats));
    }
    Ok(points)
}

fn point(config: ExperimentConfig, axis_value: f64, series: RewardSeries, stats: Vec<RunStats>) -> SweepPoint {
    let summary = summarize(&series.cells, config.epochs);
    let per_seed = config
        .seeds
        .iter()
        .map(|&s| summarize(series.cells.iter().filter(|c| c.seed == s), config.epochs))
        .collect();
    SweepPoint {
        axis_value,
        config,
        series,
        stats,
        summary,
        per_seed,
    }
}

/// Tab-separated summary table, one line per sweep value.
pub fn summary_table(axis: &str, points: &[SweepPoint]) -> String {
    let mut s = format!("{axis}\tmedian\tiqr\tzero_fraction\toutside_fraction\tnulls\n");
    for p in points {
        let m = &p.summary;
        s.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
            p.axis_value, m.median, m.iqr, m.zero_fraction, m.outside_fraction, m.nulls
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn window_ignores_early_epochs_and_counts_zeros() {
        let c = |epoch, raw: Option<f64>| RewardCell {
            seed: 0,
            epoch,
            publisher: 0,
            raw,
            norm: raw,
        };
        let cells = vec![c(1, Some(-1.0)), c(95, Some(0.0)), c(96, Some(0.5)), c(100, None), c(100, Some(0.95))];
        let s = summarize(&cells, 100);
        assert_eq!(s.count, 3);
        assert_eq!(s.nulls, 1);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.zero_fraction, 0.25);
        assert!((s.outside_fraction - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_keeps_value_order() {
        let base = ExperimentConfig {
            n_publishers: 2,
            candidate_size: 3,
            epochs: 6,
            seeds: vec![1, 2],
            hidden: 4,
            batch_size: 2,
            capacity: 4,
            ..ExperimentConfig::default()
        };
        let points = sweep(&base, "d_hat", &[3.0, 2.0]).unwrap();
        assert_eq!(points.iter().map(|p| p.config.d_hat).collect::<Vec<_>>(), vec![3, 2]);
        assert_eq!(points[0].per_seed.len(), 2);
        assert!(sweep(&base, "nope", &[1.0]).is_err());
    }
}
