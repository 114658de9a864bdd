//! Batch experiment runner for the `flavors` integrators: run benchmarks
//! and ensembles, list and describe the registry, compare runs. Outputs are
//! CSV files plus a JSON manifest per run (see `docs/csv_schema.md`).

pub mod catalog;
pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{output_dir, resolve, Overrides, Resolved};
use error::{CliError, CliResult};
use output::{Manifest, Status};

#[derive(Debug, Parser)]
#[command(name = "flavors", version, about = "Flow-averaging integrator experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a benchmark and write trajectories and diagnostics.
    Run {
        /// Benchmark name (or linear-stability-scan); may come from --config instead.
        benchmark: Option<String>,
        /// Flat TOML file with the same keys as the flags; flags win.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List bundled benchmarks.
    List,
    /// Show a benchmark's parameters and defaults.
    Describe { benchmark: String },
    /// Slow and F-errors between two configured runs.
    Compare {
        /// Config file of the first run.
        a: PathBuf,
        /// Config file of the second run, or `reference`.
        b: String,
        /// Observable name; repeatable. Defaults to all slow observables.
        #[arg(long)]
        observable: Vec<String>,
        /// F-error averaging window (default horizon / 10).
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command, printing human-readable output to `stdout`.
/// Returns the process exit code for non-error outcomes.
pub fn execute(cli: Cli, stdout: &mut impl Write) -> CliResult<i32> {
    let w = |e: std::io::Error| CliError::io("<stdout>", e);
    match cli.command {
        Command::List => {
            write!(stdout, "{}", catalog::list_text()).map_err(w)?;
            Ok(0)
        }
        Command::Describe { benchmark } => {
            write!(stdout, "{}", catalog::describe_text(&benchmark)?).map_err(w)?;
            Ok(0)
        }
        Command::Compare { a, b, observable, window, out } => {
            let out = out.unwrap_or_else(compare::default_out);
            let rows = compare::compare(&a, &b, &observable, window, &out)?;
            for r in rows {
                writeln!(
                    stdout,
                    "{}: slow_error {:e}, f_error {:e} (window {})",
                    r.observable, r.slow_error, r.f_error, r.window
                )
                .map_err(w)?;
            }
            writeln!(stdout, "wrote {}", out.join("compare.csv").display()).map_err(w)?;
            Ok(0)
        }
        Command::Run { benchmark, config, overrides } => {
            let mut flags = overrides;
            flags.benchmark = benchmark;
            let merged = match &config {
                Some(path) => flags.over(Overrides::from_file(path)?),
                None => flags,
            };
            let summary = match resolve(&merged) {
                Ok(Resolved::Run { config, bench, method }) => run::run_experiment(&config, &bench, method)?,
                Ok(Resolved::Scan(scan)) => run::run_scan(&scan)?,
                Err(e) => {
                    if let Some(dir) = output_dir(&merged) {
                        let mut m = Manifest::new("run", serde_json::to_value(&merged).unwrap_or_default());
                        m.fail(&e);
                        // Only the configuration error is reported.
                        let _ = m.write(&dir);
                    }
                    return Err(e);
                }
            };
            for f in &summary.files {
                writeln!(stdout, "wrote {}", f.display()).map_err(w)?;
            }
            if summary.status == Status::Partial {
                writeln!(
                    stdout,
                    "warning: {} of {} trajectories failed; see manifest.json",
                    summary.counts.failed,
                    summary.counts.failed + summary.counts.completed
                )
                .map_err(w)?;
                return Ok(3);
            }
            Ok(0)
        }
    }
}
