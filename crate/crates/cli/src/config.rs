//! Experiment configuration: a flat TOML file merged with command-line
//! flags (flags win), then resolved against the benchmark registry.

use std::path::{Path, PathBuf};

use clap::Args;
use flavors::problems::{self, Benchmark, Method, Model, BENCHMARK_NAMES};
use flavors::system::{make_schedule_rule_of_thumb, StepSchedule, StiffnessExponent};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "FLAVORS_OUT_DIR";

/// Pseudo-benchmark that scans stability of the linear problem.
pub const STABILITY_SCAN: &str = "linear-stability-scan";

/// Diagnostics the runner knows how to compute.
pub const DIAGNOSTICS: [&str; 4] = ["energy", "springs", "reference", "moments"];

/// Every setting of a run. All fields are optional so a config file and the
/// flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    #[arg(skip)]
    pub benchmark: Option<String>,
    /// Integration method (nonintrusive, reversible, artificial, fine, ...).
    #[arg(long)]
    pub stepper: Option<String>,
    /// Microstep.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Mesostep.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rule-of-thumb parameter: tau = gamma eps^s, delta = gamma^2.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of trajectories.
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Base seed; trajectory i uses trajectory_seed(seed, i).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record every n-th mesostep.
    #[arg(long)]
    pub stride: Option<u64>,
    /// Stiff frequency for linear, fpu-harmonic and the stability scan.
    #[arg(long)]
    pub omega: Option<f64>,
    /// FLAVOR kind for the stability scan.
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated subset of energy, springs, reference, moments.
    #[arg(long, value_delimiter = ',')]
    pub diagnostics: Option<Vec<String>>,
    /// Averaging window of the F-error.
    #[arg(long)]
    pub window: Option<f64>,
    /// Also write one CSV per ensemble member.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub per_trajectory: Option<bool>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::format(path, e.message()))
    }

    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: Self) -> Self {
        Self {
            benchmark: self.benchmark.or(base.benchmark),
            stepper: self.stepper.or(base.stepper),
            tau: self.tau.or(base.tau),
            delta: self.delta.or(base.delta),
            gamma: self.gamma.or(base.gamma),
            horizon: self.horizon.or(base.horizon),
            ensemble: self.ensemble.or(base.ensemble),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            stride: self.stride.or(base.stride),
            omega: self.omega.or(base.omega),
            kind: self.kind.or(base.kind),
            diagnostics: self.diagnostics.or(base.diagnostics),
            window: self.window.or(base.window),
            per_trajectory: self.per_trajectory.or(base.per_trajectory),
        }
    }
}

/// A fully resolved trajectory experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub stepper: String,
    pub tau: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub stride: u64,
    pub omega: Option<f64>,
    pub diagnostics: Vec<String>,
    pub window: Option<f64>,
    pub per_trajectory: bool,
}

/// A resolved stability scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub kind: String,
    pub omega: f64,
    pub deltas: Vec<f64>,
    pub tau_ratios: Vec<f64>,
    pub out: PathBuf,
}

pub enum Resolved {
    Run { config: ExperimentConfig, bench: Box<Benchmark>, method: Method },
    Scan(ScanConfig),
}

/// Maps accepted aliases onto registry names.
pub fn canonical_name(name: &str) -> &str {
    match name {
        "fpu" => "fpu-short",
        "vdp" => "van-der-pol",
        other => other,
    }
}

/// Closest known name by edit distance, if reasonably close.
pub fn suggest(name: &str) -> Option<String> {
    BENCHMARK_NAMES
        .iter()
        .chain(std::iter::once(&STABILITY_SCAN))
        .map(|n| (strsim::levenshtein(name, n), *n))
        .min()
        .filter(|(d, n)| *d <= 3.max(n.len() / 3))
        .map(|(_, n)| n.to_string())
}

pub fn lookup(name: &str, omega: Option<f64>) -> CliResult<Benchmark> {
    let name = canonical_name(name);
    if !BENCHMARK_NAMES.contains(&name) {
        return Err(CliError::UnknownBenchmark { name: name.into(), suggestion: suggest(name) });
    }
    match (name, omega) {
        (_, None) => Ok(problems::by_name(name)?),
        ("linear", Some(w)) => Ok(problems::linear_stability_problem(w)?),
        ("fpu-harmonic", Some(w)) => Ok(problems::fpu_harmonic_problem(3, w)?),
        (_, Some(_)) => Err(CliError::Config(format!("--omega is not a parameter of {name}"))),
    }
}

fn default_out(name: &str) -> PathBuf {
    let root = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("flavors-out"));
    root.join(name)
}

/// Output directory implied by the overrides, resolvable even when the rest
/// of the configuration is invalid (so a failure manifest can be written).
pub fn output_dir(o: &Overrides) -> Option<PathBuf> {
    o.out.clone().or_else(|| o.benchmark.as_deref().map(|b| default_out(canonical_name(b))))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn exponent(model: &Model) -> StiffnessExponent {
    match model {
        Model::Hamiltonian(_) | Model::Forced(_) | Model::Langevin(_) => StiffnessExponent::Half,
        Model::Ode(_) | Model::Sde(_) => StiffnessExponent::One,
    }
}

fn parse_method(s: &str) -> CliResult<Method> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        CliError::Config(format!("unknown stepper {s:?} (expected one of {})", names.join(", ")))
    })
}

/// Default scan grid: `delta` in `(0, 4]` and `tau/eps` log-spaced over `[1e-2, 1e3]`.
fn scan_grid() -> (Vec<f64>, Vec<f64>) {
    let deltas = (1..=200).map(|k| 0.02 * k as f64).collect();
    let ratios = (0..=50).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 50.0)).collect();
    (deltas, ratios)
}

pub fn resolve(o: &Overrides) -> CliResult<Resolved> {
    let name = o.benchmark.as_deref().ok_or_else(|| CliError::Config("no benchmark given".into()))?;
    let name = canonical_name(name);
    let out = output_dir(o).expect("benchmark is set");
    if name == STABILITY_SCAN {
        let kind = o.kind.as_deref().or(o.stepper.as_deref()).unwrap_or("nonintrusive");
        let method = parse_method(kind)?;
        if !matches!(method, Method::Flavor | Method::Reversible | Method::Artificial) {
            return Err(CliError::Config(format!(
                "stability scan supports nonintrusive, reversible and artificial, not {kind}"
            )));
        }
        let omega = o.omega.unwrap_or(1000.0);
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(CliError::Config(format!("omega must be non-negative, got {omega}")));
        }
        let (deltas, tau_ratios) = scan_grid();
        return Ok(Resolved::Scan(ScanConfig { kind: method.name().into(), omega, deltas, tau_ratios, out }));
    }
    if o.kind.is_some() {
        return Err(CliError::Config("--kind applies only to linear-stability-scan".into()));
    }
    let bench = lookup(name, o.omega)?;
    let method = match &o.stepper {
        Some(s) => parse_method(s)?,
        None => bench.default_method,
    };
    let schedule = resolve_schedule(o, &bench, method)?;
    // Building once validates the method against the model.
    bench.stepper(method, schedule)?;

    let horizon = positive("horizon", o.horizon.unwrap_or(bench.horizon))?;
    let ensemble = o.ensemble.unwrap_or(if bench.model.is_stochastic() { bench.ensemble_size } else { 1 });
    if ensemble == 0 {
        return Err(CliError::Config("ensemble must be at least 1".into()));
    }
    let stride = o.stride.unwrap_or(bench.default_stride);
    if stride == 0 {
        return Err(CliError::Config("stride must be at least 1".into()));
    }
    let diagnostics = match &o.diagnostics {
        Some(list) => list.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => default_diagnostics(&bench, ensemble),
    };
    for d in &diagnostics {
        check_diagnostic(d, &bench, ensemble)?;
    }
    let window = o.window.map(|w| positive("window", w)).transpose()?;
    Ok(Resolved::Run {
        config: ExperimentConfig {
            benchmark: bench.name.clone(),
            stepper: method.name().into(),
            tau: schedule.tau(),
            delta: schedule.delta(),
            gamma: schedule.gamma(),
            horizon,
            ensemble,
            seed: o.seed.unwrap_or(0),
            out,
            stride,
            omega: o.omega,
            diagnostics,
            window,
            per_trajectory: o.per_trajectory.unwrap_or(false),
        },
        bench: Box::new(bench),
        method,
    })
}

fn resolve_schedule(o: &Overrides, bench: &Benchmark, method: Method) -> CliResult<StepSchedule> {
    if let Some(gamma) = o.gamma {
        if o.tau.is_some() || o.delta.is_some() {
            return Err(CliError::Config(
                "--gamma sets both tau and delta; do not combine it with --tau or --delta".into(),
            ));
        }
        return Ok(make_schedule_rule_of_thumb(bench.epsilon(), gamma, exponent(&bench.model))?);
    }
    let tau = positive("tau", o.tau.unwrap_or(bench.default_schedule.tau()))?;
    if method.is_fine() {
        // Single-scale methods step with tau.
        if let Some(d) = o.delta {
            if d != tau {
                return Err(CliError::Config(format!("{method} steps with tau; got a different delta {d}")));
            }
        }
        return Ok(StepSchedule::new(tau, tau)?);
    }
    let delta = positive("delta", o.delta.unwrap_or(bench.default_schedule.delta()))?;
    Ok(StepSchedule::new(tau, delta)?)
}

fn is_fpu(bench: &Benchmark) -> bool {
    bench.name.starts_with("fpu")
}

fn default_diagnostics(bench: &Benchmark, ensemble: usize) -> Vec<String> {
    let mut d = Vec::new();
    if bench.model.hamiltonian().is_some() {
        d.push("energy".to_string());
    }
    if is_fpu(bench) {
        d.push("springs".into());
    }
    if ensemble > 1 {
        d.push("moments".into());
    }
    d
}

fn check_diagnostic(d: &str, bench: &Benchmark, ensemble: usize) -> CliResult<()> {
    let ok = match d {
        "energy" => bench.model.hamiltonian().is_some(),
        "springs" => is_fpu(bench),
        "moments" => ensemble > 1,
        "reference" => ensemble == 1,
        _ => {
            return Err(CliError::Config(format!(
                "unknown diagnostic {d:?} (expected one of {})",
                DIAGNOSTICS.join(", ")
            )))
        }
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "diagnostic {d:?} does not apply to {} with ensemble size {ensemble}",
            bench.name
        )))
    }
}
