use std::path::{Path, PathBuf};
use std::time::Instant;

use flavors::analysis::{f_error, slow_error};
use flavors::problems::Benchmark;

use crate::config::{resolve, Overrides, Resolved, OUT_DIR_ENV};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, Manifest};
use crate::run::simulate;

/// Second operand meaning "the benchmark's own reference solution".
pub const REFERENCE: &str = "reference";

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub observable: String,
    pub slow_error: f64,
    pub f_error: f64,
    pub window: f64,
}

fn load(path: &Path) -> CliResult<(crate::config::ExperimentConfig, Benchmark, flavors::problems::Method)> {
    let o = Overrides::from_file(path)?;
    match resolve(&o)? {
        Resolved::Run { config, bench, method } => Ok((config, *bench, method)),
        Resolved::Scan(_) => {
            Err(CliError::Config(format!("{}: a stability scan has no trajectory to compare", path.display())))
        }
    }
}

pub fn default_out() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("flavors-out")).join("compare")
}

/// Errors between the first trajectory of config `a` and that of config
/// `b` (or the reference solution), written to `<out>/compare.csv`.
pub fn compare(
    a: &Path,
    b: &str,
    observables: &[String],
    window: Option<f64>,
    out: &Path,
) -> CliResult<Vec<CompareRow>> {
    let start = Instant::now();
    let mut manifest = Manifest::new(
        "compare",
        serde_json::json!({ "a": a.display().to_string(), "b": b, "observables": observables, "window": window }),
    );
    let result = compare_inner(a, b, observables, window, out);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    match &result {
        Ok(_) => manifest.files = vec!["compare.csv".into()],
        Err(e) => manifest.fail(e),
    }
    manifest.write(out)?;
    result
}

fn compare_inner(
    a: &Path,
    b: &str,
    observables: &[String],
    window: Option<f64>,
    out: &Path,
) -> CliResult<Vec<CompareRow>> {
    let (ca, bench, ma) = load(a)?;
    let ta = simulate(&ca, &bench, ma, 0)?;
    let tb = if b == REFERENCE {
        bench
            .reference_trajectory(ca.horizon, ca.stride as f64 * ca.delta, ta.seed)
            .map_err(|f| CliError::Integration(f.error))?
    } else {
        let (cb, bench_b, mb) = load(Path::new(b))?;
        if bench_b.name != bench.name {
            return Err(CliError::Config(format!("cannot compare {} with {}", bench.name, bench_b.name)));
        }
        simulate(&cb, &bench_b, mb, 0)?
    };
    let window = window.unwrap_or(ca.horizon / 10.0);
    let phis: Vec<_> = if observables.is_empty() {
        bench.slow_observables.iter().collect()
    } else {
        observables
            .iter()
            .map(|n| {
                bench.observable(n).ok_or_else(|| CliError::Config(format!("{} has no observable {n:?}", bench.name)))
            })
            .collect::<CliResult<_>>()?
    };
    let rows: Vec<CompareRow> = phis
        .into_iter()
        .map(|phi| {
            Ok(CompareRow {
                observable: phi.name.clone(),
                slow_error: slow_error(&ta, &tb, phi)?,
                f_error: f_error(&ta, &tb, phi, window)?,
                window,
            })
        })
        .collect::<CliResult<_>>()?;
    crate::output::create_dir(out)?;
    let header = ["observable", "slow_error", "f_error", "window"].map(String::from);
    write_csv(
        &out.join("compare.csv"),
        &header,
        rows.iter().map(|r| vec![r.observable.clone(), num(r.slow_error), num(r.f_error), num(r.window)]),
    )?;
    Ok(rows)
}
