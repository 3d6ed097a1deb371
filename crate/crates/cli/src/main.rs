use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use refnft::analysis::{self, report, ActionGrid, MarketGame, PayoffSurface, WitnessGrid};
use refnft::harness::{self, ExperimentConfig};
use refnft::Error;

#[derive(Parser, Debug)]
#[command(name = "refnft", version, about = "Reference-incentive NFT market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration file, or `default` for built-in values.
    #[arg(long, default_value = "default")]
    config: String,
    /// Run a single seed instead of the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of epochs.
    #[arg(long)]
    epochs: Option<u64>,
    /// Output directory.
    #[arg(long, env = "REFNFT_OUT_DIR", default_value = "runs")]
    out: PathBuf,
    /// Maximum number of parallel runs (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and write its reward series.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a configuration once per value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Check that every NFT lifecycle closes within its decay horizon.
    VerifyFinality {
        #[command(flatten)]
        common: Common,
        /// Randomized lifecycles and geometric-sum pairs.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Search the payoff surface over (sigma, q) for a non-convex point.
    Nonconvexity {
        #[command(flatten)]
        common: Common,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Run fictitious play on a discretized pricing game.
    Exploitability {
        #[command(flatten)]
        common: Common,
        /// Number of players.
        #[arg(long, default_value_t = 2)]
        players: usize,
        /// Levels per action axis: lambda, pi_r, weight, price.
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 2, 2, 3])]
        levels: Vec<usize>,
        /// Fictitious-play iterations.
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. }
            | Error::Domain { .. }
            | Error::Simplex(_)
            | Error::Shape { .. }
            | Error::InconsistentAction(_)
            | Error::GridTooLarge { .. } => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut config = if common.config == "default" {
        ExperimentConfig::default()
    } else {
        // A missing or unreadable file is a usage problem, not a runtime one.
        ExperimentConfig::load(Path::new(&common.config)).map_err(|e| Failure::usage(e.to_string()))?
    };
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
    }
    if let Some(epochs) = common.epochs {
        config.epochs = epochs;
    }
    config.validate()?;
    Ok(config)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn setup_pool(jobs: usize) {
    if jobs > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn value_tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { common } => {
            setup_pool(common.jobs);
            let config = load_config(&common)?;
            prepare_out(&common.out)?;
            let (series, stats) = harness::run_with_stats(&config)?;
            harness::write_csv_file(&series, "simulate", None, &common.out.join("rewards.csv"))?;
            harness::write_config_echo(&config, &common.out.join("config.toml"))?;
            for (seed, st) in config.seeds.iter().zip(&stats) {
                let s = harness::summarize(series.cells.iter().filter(|c| c.seed == *seed), config.epochs);
                println!(
                    "seed {seed}: minted {} settled {} unsettled {} final median {:.4} iqr {:.4}",
                    st.minted, st.settled, st.unsettled, s.median, s.iqr
                );
            }
        }
        Command::Sweep { common, axis, values } => {
            setup_pool(common.jobs);
            let config = load_config(&common)?;
            // Check every value before any output is written.
            for &v in &values {
                config.with_axis(&axis, v)?;
            }
            prepare_out(&common.out)?;
            let points = harness::sweep(&config, &axis, &values)?;
            for (i, p) in points.iter().enumerate() {
                let tag = format!("{axis}_{}", value_tag(p.axis_value));
                let run_id = format!("{axis}-{i}");
                harness::write_csv_file(&p.series, &run_id, Some(p.axis_value), &common.out.join(format!("{tag}.csv")))?;
                harness::write_config_echo(&p.config, &common.out.join(format!("{tag}.toml")))?;
                println!(
                    "{axis} = {}: final median {:.4} iqr {:.4} zero fraction {:.4}",
                    p.axis_value, p.summary.median, p.summary.iqr, p.summary.zero_fraction
                );
            }
            write_text(&common.out.join("summary.tsv"), &harness::summary_table(&axis, &points))?;
        }
        Command::VerifyFinality { common, trials } => {
            let config = load_config(&common)?;
            prepare_out(&common.out)?;
            let seed = config.seeds[0];
            let r = analysis::verify_finality(&config.market(), trials, seed)?;
            write_text(&common.out.join("finality.txt"), &report::finality_text(&r))?;
            println!(
                "finality: {} lifecycles, {} pairs, max error {:e}, {} counterexamples",
                r.lifecycles,
                r.geometric_pairs,
                r.max_geometric_error,
                r.counterexamples.len()
            );
            if !r.passed() {
                let c = &r.counterexamples[0];
                return Err(Failure::runtime(format!(
                    "finality violated at sigma = {}, d = {}: {}",
                    c.sigma, c.d, c.detail
                )));
            }
        }
        Command::Nonconvexity { common, points } => {
            let config = load_config(&common)?;
            if points == 0 {
                return Err(Failure::usage("--points must be positive"));
            }
            prepare_out(&common.out)?;
            let params = config.market();
            let surface = PayoffSurface::default_for(&params);
            let r = analysis::nonconvexity_witness(&surface.evaluator(), &WitnessGrid::for_params(&params, points));
            write_text(&common.out.join("nonconvexity.txt"), &report::witness_text(&r))?;
            match &r.witness {
                Some(w) => println!(
                    "witness at sigma = {}, q = {}: AC - B^2 = {:e} ({} negative points)",
                    w.sigma,
                    w.q,
                    w.determinant(),
                    r.negative_points
                ),
                None => println!("no witness on a {points}x{points} grid"),
            }
        }
        Command::Exploitability {
            common,
            players,
            levels,
            iterations,
        } => {
            setup_pool(common.jobs);
            let config = load_config(&common)?;
            if players == 0 {
                return Err(Failure::usage("--players must be positive"));
            }
            if levels.len() != 4 {
                return Err(Failure::usage(format!("--levels takes 4 values, got {}", levels.len())));
            }
            let params = config.market();
            let grid = ActionGrid::uniform(&params, [levels[0], levels[1], levels[2], levels[3]])?;
            let base: Vec<f64> = (0..players).map(|p| (p as f64 + 1.0) / (players as f64 + 1.0)).collect();
            let game = MarketGame::new(params, grid, base)?;
            prepare_out(&common.out)?;
            let trace = analysis::fictitious_play(&game, iterations, config.seeds[0])?;
            write_text(&common.out.join("exploitability.txt"), &report::trace_text(&trace))?;
            println!(
                "fictitious play: {} iterations, final exploitability {:e}",
                iterations,
                trace.exploitability.last().copied().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
