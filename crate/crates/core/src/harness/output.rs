use std::fs;
use std::io::Write;
use std::path::Path;

use super::config::ExperimentConfig;
use super::run::RewardSeries;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 7] = ["run_id", "axis_value", "seed", "epoch", "publisher", "reward_raw", "reward_norm"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes the series as CSV with a header row. Nulls are empty fields.
pub fn write_csv<W: Write>(series: &RewardSeries, run_id: &str, axis_value: Option<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let axis = fmt_opt(axis_value);
    for c in &series.cells {
        w.write_record([
            run_id,
            &axis,
            &c.seed.to_string(),
            &c.epoch.to_string(),
            &c.publisher.to_string(),
            &fmt_opt(c.raw),
            &fmt_opt(c.norm),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(series: &RewardSeries, run_id: &str, axis_value: Option<f64>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(series, run_id, axis_value, std::io::BufWriter::new(file))
}

/// Sidecar holding every effective parameter of a run.
pub fn write_config_echo(config: &ExperimentConfig, path: &Path) -> Result<()> {
    fs::write(path, config.to_toml_string()).map_err(|e| Error::io(path, e))
}

/// Reads a CSV written by [`write_csv`] back into cells; used by tests and
/// downstream tooling.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<(String, Option<f64>, super::run::RewardCell)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::config("csv", format!("unexpected header {header:?}")));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::config("csv", format!("bad number `{s}`")))
        }
    };
    let parse_int = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::config("csv", format!("bad integer `{s}`"))) };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push((
            rec[0].to_string(),
            parse_opt(&rec[1])?,
            super::run::RewardCell {
                seed: parse_int(&rec[2])?,
                epoch: parse_int(&rec[3])?,
                publisher: parse_int(&rec[4])? as usize,
                raw: parse_opt(&rec[5])?,
                norm: parse_opt(&rec[6])?,
            },
        ));
    }
    Ok(out)
}
