use std::path::{Path, PathBuf};
use std::time::Instant;

use flavors::analysis::{
    energy_series, ensemble_stats, f_error, fpu_diagnostics, slow_error, stability_domain_scan, EnsembleStats,
};
use flavors::flavor::{integrate, integrate_ensemble, Sampler, Trajectory};
use flavors::noise::trajectory_seed;
use flavors::problems::{Benchmark, Method};
use flavors::system::StepSchedule;

use crate::config::{ExperimentConfig, ScanConfig};
use crate::error::{CliError, CliResult};
use crate::output::{
    create_dir, num, opt_num, write_csv, write_trajectory, BenchmarkInfo, Counts, Diagnostics, Manifest, MemberFailure,
    SeedInfo, Status, SEED_DERIVATION,
};

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
    pub status: Status,
    pub counts: Counts,
}

fn config_json<T: serde::Serialize>(c: &T) -> serde_json::Value {
    serde_json::to_value(c).expect("config serializes")
}

fn schedule(c: &ExperimentConfig) -> CliResult<StepSchedule> {
    Ok(StepSchedule::new(c.tau, c.delta)?)
}

/// Integrates trajectory `index` of the experiment without touching disk.
pub fn simulate(c: &ExperimentConfig, bench: &Benchmark, method: Method, index: u64) -> CliResult<Trajectory> {
    let stepper = bench.stepper(method, schedule(c)?)?;
    integrate(&stepper, &bench.initial_state, c.horizon, Sampler::every(c.stride), trajectory_seed(c.seed, index))
        .map_err(|f| CliError::Integration(f.error))
}

fn relative(out: &Path, files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|f| f.strip_prefix(out).unwrap_or(f).display().to_string()).collect()
}

fn param(bench: &Benchmark, key: &str) -> Option<f64> {
    bench.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

/// Runs an experiment and writes its files. The manifest is written on
/// every path out of this function.
pub fn run_experiment(c: &ExperimentConfig, bench: &Benchmark, method: Method) -> CliResult<RunSummary> {
    let start = Instant::now();
    let mut manifest = Manifest::new("run", config_json(c));
    manifest.benchmark = Some(BenchmarkInfo::of(bench));
    let seeds: Vec<u64> = (0..c.ensemble as u64).map(|i| trajectory_seed(c.seed, i)).collect();
    manifest.seeds = Some(SeedInfo { base: c.seed, derivation: SEED_DERIVATION, trajectory_seeds: seeds.clone() });
    let mut files = Vec::new();
    let result = run_inner(c, bench, method, &mut manifest, &mut files);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.files = relative(&c.out, &files);
    if let Err(e) = &result {
        manifest.fail(e);
    }
    files.push(manifest.write(&c.out)?);
    result?;
    Ok(RunSummary { out: c.out.clone(), files, status: manifest.status.clone(), counts: manifest.counts.clone() })
}

fn run_inner(
    c: &ExperimentConfig,
    bench: &Benchmark,
    method: Method,
    manifest: &mut Manifest,
    files: &mut Vec<PathBuf>,
) -> CliResult<()> {
    create_dir(&c.out)?;
    let stepper = bench.stepper(method, schedule(c)?)?;
    if c.diagnostics.iter().any(|d| d == "reference") {
        check_window(c)?;
    }
    let results = if c.ensemble == 1 {
        vec![integrate(&stepper, &bench.initial_state, c.horizon, Sampler::every(c.stride), trajectory_seed(c.seed, 0))]
    } else {
        integrate_ensemble(&stepper, &bench.initial_state, c.horizon, Sampler::every(c.stride), c.seed, c.ensemble)
    };
    let mut done = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => done.push((i, t)),
            Err(f) => {
                manifest.failures.push(MemberFailure {
                    index: i,
                    seed: f.partial.seed,
                    mesosteps_completed: f.partial.mesosteps,
                    time: f.partial.times.last().copied().unwrap_or(0.0),
                    error: f.error.to_string(),
                });
                if c.ensemble == 1 {
                    let path = c.out.join("trajectory.csv");
                    write_trajectory(&path, &f.partial, bench)?;
                    files.push(path);
                    add_counts(&mut manifest.counts, &f.partial);
                    manifest.counts.failed = 1;
                    return Err(CliError::Integration(f.error));
                }
            }
        }
    }
    for (_, t) in &done {
        add_counts(&mut manifest.counts, t);
    }
    manifest.counts.completed = done.len();
    manifest.counts.failed = c.ensemble - done.len();

    let mut diag = Diagnostics::default();
    diag.scalar("mesosteps", manifest.counts.mesosteps as f64);
    diag.scalar("legacy_calls", manifest.counts.legacy_calls as f64);
    diag.scalar("stiff_calls", manifest.counts.stiff_calls as f64);
    if c.ensemble == 1 {
        let traj = &done[0].1;
        let path = c.out.join("trajectory.csv");
        write_trajectory(&path, traj, bench)?;
        files.push(path);
        single_diagnostics(c, bench, traj, &mut diag)?;
    } else {
        if c.per_trajectory {
            for (i, t) in &done {
                let path = c.out.join(format!("trajectory_{i:05}.csv"));
                write_trajectory(&path, t, bench)?;
                files.push(path);
            }
        }
        if done.len() >= 2 {
            let trajs: Vec<Trajectory> = done.into_iter().map(|(_, t)| t).collect();
            let stats = ensemble_summaries(bench, &trajs)?;
            let path = c.out.join("ensemble_summary.csv");
            write_summary(&path, &stats)?;
            files.push(path);
            if c.diagnostics.iter().any(|d| d == "moments") {
                for (name, s) in &stats {
                    diag.series(&format!("mean:{name}"), &s.times, &s.mean);
                    diag.series(&format!("variance:{name}"), &s.times, &s.variance);
                }
            }
        }
        diag.scalar("completed", manifest.counts.completed as f64);
        diag.scalar("failed", manifest.counts.failed as f64);
        if manifest.counts.failed > 0 {
            manifest.status = Status::Partial;
        }
    }
    let path = c.out.join("diagnostics.csv");
    diag.write(&path)?;
    files.push(path);
    Ok(())
}

fn add_counts(counts: &mut Counts, t: &Trajectory) {
    counts.mesosteps += t.mesosteps;
    counts.legacy_calls += t.legacy_calls;
    counts.stiff_calls += t.stiff_calls;
}

/// F-error windows must hold at least ten samples.
fn check_window(c: &ExperimentConfig) -> CliResult<()> {
    let window = c.window.unwrap_or(c.horizon / 10.0);
    let spacing = c.stride as f64 * c.delta;
    if window < 10.0 * spacing * (1.0 - 1e-9) {
        return Err(CliError::Config(format!(
            "F-error window {window} holds fewer than 10 samples at spacing {spacing}; lower --stride or raise --window"
        )));
    }
    Ok(())
}

fn single_diagnostics(
    c: &ExperimentConfig,
    bench: &Benchmark,
    traj: &Trajectory,
    diag: &mut Diagnostics,
) -> CliResult<()> {
    for d in &c.diagnostics {
        match d.as_str() {
            "energy" => {
                let ham = bench.model.hamiltonian().expect("checked at resolution");
                let e = energy_series(traj, ham);
                diag.series("energy", &e.times, &e.energy);
                diag.scalar("energy_slope", e.slope);
                diag.scalar("energy_oscillation", e.oscillation);
            }
            "springs" => {
                let (m, omega) = (param(bench, "m").unwrap_or(3.0) as usize, param(bench, "omega").unwrap_or(1.0));
                let f = fpu_diagnostics(traj, omega, m)?;
                for (j, s) in f.springs.iter().enumerate() {
                    diag.series(&format!("stiff_energy_{}", j + 1), &f.times, s);
                }
                diag.series("stiff_energy_total", &f.times, &f.total);
                diag.scalar("stiff_energy_cv", f.total_variation());
            }
            "reference" => {
                let window = c.window.unwrap_or(c.horizon / 10.0);
                let sample_dt = c.stride as f64 * c.delta;
                let reference = bench
                    .reference_trajectory(c.horizon, sample_dt, traj.seed)
                    .map_err(|f| CliError::Integration(f.error))?;
                diag.scalar("window", window);
                for phi in &bench.slow_observables {
                    diag.scalar(format!("slow_error:{}", phi.name), slow_error(traj, &reference, phi)?);
                    diag.scalar(format!("f_error:{}", phi.name), f_error(traj, &reference, phi, window)?);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn ensemble_summaries(bench: &Benchmark, trajs: &[Trajectory]) -> CliResult<Vec<(String, EnsembleStats)>> {
    bench
        .slow_observables
        .iter()
        .chain(&bench.fast_observables)
        .map(|phi| Ok((phi.name.clone(), ensemble_stats(trajs, phi)?)))
        .collect()
}

/// `t, n, <obs>_mean, <obs>_mean_se, <obs>_var, <obs>_var_se, <obs>_acf, <obs>_acf_se, ...`.
fn write_summary(path: &Path, stats: &[(String, EnsembleStats)]) -> CliResult<()> {
    let mut header = vec!["t".to_string(), "n".to_string()];
    for (name, _) in stats {
        for col in ["mean", "mean_se", "var", "var_se", "acf", "acf_se"] {
            header.push(format!("{name}_{col}"));
        }
    }
    let first = &stats[0].1;
    let rows = (0..first.times.len()).map(|k| {
        let mut row = vec![num(first.times[k]), first.n.to_string()];
        for (_, s) in stats {
            for v in [
                s.mean[k],
                s.mean_se[k],
                s.variance[k],
                s.variance_se[k],
                s.autocorrelation[k],
                s.autocorrelation_se[k],
            ] {
                row.push(num(v));
            }
        }
        row
    });
    write_csv(path, &header, rows)
}

/// Writes `stability_grid.csv` for the scan.
pub fn run_scan(c: &ScanConfig) -> CliResult<RunSummary> {
    let start = Instant::now();
    let mut manifest = Manifest::new("run", config_json(c));
    let mut files = Vec::new();
    let result = (|| -> CliResult<()> {
        create_dir(&c.out)?;
        let method = Method::parse(&c.kind).expect("resolved kind");
        let grid = stability_domain_scan(method, c.omega, &c.deltas, &c.tau_ratios)?;
        let path = c.out.join("stability_grid.csv");
        let header = ["tau_ratio", "delta", "tau", "spectral_radius", "stable"].map(String::from);
        let rows = grid.cells.iter().map(|cell| {
            let stable = cell.stable.map(|s| if s { "1" } else { "0" }).unwrap_or("").to_string();
            let radius = if cell.stable.is_some() { Some(cell.spectral_radius) } else { None };
            vec![num(cell.tau_ratio), num(cell.delta), num(cell.tau), opt_num(radius), stable]
        });
        write_csv(&path, &header, rows)?;
        files.push(path);
        Ok(())
    })();
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.files = relative(&c.out, &files);
    if let Err(e) = &result {
        manifest.fail(e);
    }
    files.push(manifest.write(&c.out)?);
    result?;
    Ok(RunSummary { out: c.out.clone(), files, status: manifest.status.clone(), counts: Counts::default() })
}
