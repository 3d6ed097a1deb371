//! Seeded experiment campaigns: configuration files, runs with one learner
//! per publisher, reward normalization, sweeps and CSV output.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{ExperimentConfig, SWEEP_AXES};
pub use output::{read_csv, write_config_echo, write_csv, write_csv_file, CSV_COLUMNS};
pub use run::{normalize, renormalize, run, run_seed, run_with_stats, RewardCell, RewardSeries, RunStats};
pub use sweep::{quantile, summarize, summary_table, sweep, SweepPoint, WindowSummary, FINAL_WINDOW, OUTLIER_BOUND};
