//! Bundled benchmark systems with their standard parameters, initial
//! conditions, slow observables and reference solutions.

mod fpu;
mod hamiltonian;
mod kapitza;
mod linear;
mod stochastic;
mod van_der_pol;

use std::fmt;
use std::sync::Arc;

pub use fpu::{fpu_harmonic_problem, fpu_long_problem, fpu_problem, fpu_short_problem, harmonic_fpu_beat_period};
pub use hamiltonian::{
    nonlinear_stiff_soft_problem, primitive_md_problem, primitive_md_with_initial, propane_problem,
    triple_chain_problem, triple_chain_with_omega,
};
pub use kapitza::{kapitza_problem, kapitza_with_forcing};
pub use linear::{linear_exact_flow, linear_stability_problem};
pub use stochastic::{hidden_sde_problem, hidden_sde_separated_problem, langevin_fast_problem, langevin_slow_problem};
pub use van_der_pol::{van_der_pol_cartesian, van_der_pol_hidden};

use crate::error::{FlavorError, Result};
use crate::flavor::{ConstraintSpec, FastSubstep, FlavorStepper, IntegrationFailure, Sampler, Trajectory};
use crate::legacy::{
    EulerMaruyama, FastFlowKind, ForwardEuler, Gla, ImpulseMethod, OneStepMap, SymplecticEuler, VelocityVerlet,
};
use crate::system::{
    DriftModel, ForcedHamiltonian, LangevinSystem, SdeModel, SeparatedHamiltonian, SlowObservable, StepSchedule,
};

/// The dynamical system behind a benchmark.
#[derive(Clone)]
pub enum Model {
    Ode(Arc<dyn DriftModel>),
    Hamiltonian(Arc<SeparatedHamiltonian>),
    Forced(Arc<ForcedHamiltonian>),
    Sde(Arc<dyn SdeModel>),
    Langevin(Arc<LangevinSystem>),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ode(m) => m.dim(),
            Self::Hamiltonian(h) => h.dim(),
            Self::Forced(f) => f.hamiltonian.dim(),
            Self::Sde(m) => m.dim(),
            Self::Langevin(l) => l.hamiltonian.dim(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Self::Ode(m) => m.epsilon(),
            Self::Hamiltonian(h) => h.epsilon(),
            Self::Forced(f) => f.hamiltonian.epsilon(),
            Self::Sde(m) => m.epsilon(),
            Self::Langevin(l) => l.hamiltonian.epsilon(),
        }
    }

    /// The Hamiltonian part, if there is one.
    pub fn hamiltonian(&self) -> Option<&Arc<SeparatedHamiltonian>> {
        match self {
            Self::Hamiltonian(h) => Some(h),
            Self::Forced(f) => Some(&f.hamiltonian),
            Self::Langevin(l) => Some(&l.hamiltonian),
            _ => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Sde(_) | Self::Langevin(_))
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Ode(_) => "ode",
            Self::Hamiltonian(_) => "hamiltonian",
            Self::Forced(_) => "forced-hamiltonian",
            Self::Sde(_) => "sde",
            Self::Langevin(_) => "langevin",
        }
    }
}

/// Integration method selectable for a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// The model's natural FLAVOR: nonintrusive for ODEs and Hamiltonians,
    /// SDE FLAVOR for SDEs, Langevin FLAVOR for Langevin systems, forced
    /// FLAVOR for nonautonomous systems.
    Flavor,
    /// Symmetric (time-reversible) FLAVOR.
    Reversible,
    /// Artificial FLAVOR with frozen fast directions.
    Artificial,
    /// The legacy integrator underlying [`Method::Flavor`] at step `tau` with the stiff part on.
    Fine,
    /// The Strang pair underlying [`Method::Reversible`] at step `tau`.
    FineReversible,
    VelocityVerlet,
    /// Impulse method at step `delta` with the registered exact fast flow.
    Impulse,
    /// Geometric Langevin algorithm at step `tau`.
    Gla,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Flavor,
        Method::Reversible,
        Method::Artificial,
        Method::Fine,
        Method::FineReversible,
        Method::VelocityVerlet,
        Method::Impulse,
        Method::Gla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Flavor => "nonintrusive",
            Self::Reversible => "reversible",
            Self::Artificial => "artificial",
            Self::Fine => "fine",
            Self::FineReversible => "fine-reversible",
            Self::VelocityVerlet => "velocity-verlet",
            Self::Impulse => "impulse",
            Self::Gla => "gla",
        }
    }

    /// Parses a method name; `flavor`, `sde`, `langevin` and `nonautonomous`
    /// are accepted as aliases of `nonintrusive`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nonintrusive" | "flavor" | "sde" | "langevin" | "nonautonomous" => Some(Self::Flavor),
            "reversible" | "langevin-reversible" => Some(Self::Reversible),
            "artificial" => Some(Self::Artificial),
            "fine" | "legacy" => Some(Self::Fine),
            "fine-reversible" => Some(Self::FineReversible),
            "velocity-verlet" | "vv" => Some(Self::VelocityVerlet),
            "impulse" => Some(Self::Impulse),
            "gla" => Some(Self::Gla),
            _ => None,
        }
    }

    /// True for single-scale methods (no on/off switching).
    pub fn is_fine(self) -> bool {
        matches!(self, Self::Fine | Self::FineReversible | Self::VelocityVerlet | Self::Gla)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type ClosedForm = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// How a benchmark's ground truth is produced.
#[derive(Clone)]
pub enum Reference {
    /// Fine run of `method` with microstep `h`.
    Fine { method: Method, h: f64 },
    /// State as an explicit function of time.
    ClosedForm(ClosedForm),
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fine { method, h } => write!(f, "Fine({method}, h={h})"),
            Self::ClosedForm(_) => f.write_str("ClosedForm"),
        }
    }
}

/// A ready-to-run experiment.
#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    /// One-line description of the experiment.
    pub anchor: String,
    pub model: Model,
    pub default_schedule: StepSchedule,
    pub default_method: Method,
    pub initial_state: Vec<f64>,
    pub horizon: f64,
    pub ensemble_size: usize,
    pub state_labels: Vec<String>,
    pub slow_observables: Vec<SlowObservable>,
    pub fast_observables: Vec<SlowObservable>,
    pub reference: Reference,
    pub constraints: Option<ConstraintSpec>,
    /// Physical parameters, for display.
    pub params: Vec<(String, f64)>,
    pub default_stride: u64,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("model", &self.model.family())
            .field("default_schedule", &self.default_schedule)
            .field("initial_state", &self.initial_state)
            .field("horizon", &self.horizon)
            .field("reference", &self.reference)
            .finish()
    }
}

pub(crate) fn hamiltonian_labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).chain(names.iter().map(|s| format!("p_{s}"))).collect()
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.model.epsilon()
    }

    /// Methods that can be built for this benchmark.
    pub fn supported_methods(&self) -> Vec<Method> {
        Method::ALL.into_iter().filter(|m| self.stepper(*m, self.default_schedule).is_ok()).collect()
    }

    pub fn observable(&self, name: &str) -> Option<&SlowObservable> {
        self.slow_observables.iter().chain(&self.fast_observables).find(|o| o.name == name)
    }

    fn unsupported(&self, method: Method) -> FlavorError {
        FlavorError::InvalidInput(format!(
            "method {method} is not available for {} ({})",
            self.name,
            self.model.family()
        ))
    }

    fn legacy_map(&self) -> Result<Arc<dyn OneStepMap>> {
        match &self.model {
            Model::Ode(m) => Ok(Arc::new(ForwardEuler::new(m.clone()))),
            Model::Hamiltonian(h) => Ok(Arc::new(SymplecticEuler::new(h.clone()))),
            Model::Langevin(l) => Ok(Arc::new(SymplecticEuler::new(l.hamiltonian.clone()))),
            _ => Err(FlavorError::InvalidInput("no deterministic legacy map".into())),
        }
    }

    /// Builds the stepper for `method`. Fine methods step with `tau`, the
    /// impulse method with `delta`.
    pub fn stepper(&self, method: Method, schedule: StepSchedule) -> Result<FlavorStepper> {
        let eps = self.epsilon();
        let (tau, delta) = (schedule.tau(), schedule.delta());
        let stepper = match (method, &self.model) {
            (Method::Flavor, Model::Ode(_) | Model::Hamiltonian(_)) => {
                FlavorStepper::nonintrusive(self.legacy_map()?, schedule, eps)?
            }
            (Method::Flavor, Model::Forced(f)) => FlavorStepper::nonautonomous(f.clone(), schedule)?,
            (Method::Flavor, Model::Sde(m)) => {
                FlavorStepper::sde(Arc::new(EulerMaruyama::new(m.clone())), schedule, eps)?
            }
            (Method::Flavor, Model::Langevin(l)) => FlavorStepper::langevin(l, self.legacy_map()?, schedule)?,
            (Method::Reversible, Model::Hamiltonian(_)) => {
                FlavorStepper::reversible(self.legacy_map()?, schedule, eps)?
            }
            (Method::Reversible, Model::Langevin(l)) => {
                FlavorStepper::langevin_reversible(l, self.legacy_map()?, schedule)?
            }
            (Method::Artificial, Model::Hamiltonian(h)) => {
                let constraints = self.constraints.as_ref().ok_or_else(|| self.unsupported(method))?;
                let fast =
                    if h.exact_fast_flow().is_some() { FastSubstep::Exact } else { FastSubstep::SymplecticEuler };
                FlavorStepper::artificial(h.clone(), constraints, schedule, fast)?
            }
            (Method::Fine, Model::Ode(_) | Model::Hamiltonian(_)) => {
                FlavorStepper::legacy(self.legacy_map()?, tau, 1.0 / eps)?
            }
            (Method::Fine, Model::Forced(f)) => FlavorStepper::legacy_forced(f.clone(), tau)?,
            (Method::Fine, Model::Sde(m)) => {
                FlavorStepper::legacy_stochastic(Arc::new(EulerMaruyama::new(m.clone())), tau, 1.0 / eps)?
            }
            (Method::Fine | Method::Gla, Model::Langevin(l)) => {
                FlavorStepper::legacy_stochastic(Arc::new(Gla::new(l)?), tau, 1.0 / eps)?
            }
            (Method::FineReversible, Model::Hamiltonian(_)) => {
                FlavorStepper::legacy_strang(self.legacy_map()?, tau, 1.0 / eps)?
            }
            (Method::VelocityVerlet, Model::Hamiltonian(h)) => {
                FlavorStepper::legacy(Arc::new(VelocityVerlet::new(h.clone())), tau, 1.0 / eps)?
            }
            (Method::Impulse, Model::Hamiltonian(h)) => {
                let kind = if h.exact_fast_flow().is_some() {
                    FastFlowKind::Exact
                } else {
                    FastFlowKind::Numeric { substeps: ((delta / tau).round() as usize).max(1) }
                };
                FlavorStepper::legacy(Arc::new(ImpulseMethod::new(h.clone(), kind)?), delta, 1.0 / eps)?
            }
            _ => return Err(self.unsupported(method)),
        };
        Ok(match self.model.hamiltonian() {
            Some(h) => {
                let h = h.clone();
                stepper.with_energy(Arc::new(move |u: &[f64]| h.energy_state(u)))
            }
            None => stepper,
        })
    }

    /// Reference trajectory over `[0, t_end]` sampled every `sample_dt`
    /// (rounded to a whole number of reference steps).
    pub fn reference_trajectory(
        &self,
        t_end: f64,
        sample_dt: f64,
        seed: u64,
    ) -> std::result::Result<Trajectory, Box<IntegrationFailure>> {
        match &self.reference {
            Reference::Fine { method, h } => {
                let stepper = self
                    .stepper(*method, StepSchedule::new(*h, *h).map_err(|e| failure(e, *h))?)
                    .map_err(|e| failure(e, *h))?;
                let stride = ((sample_dt / h).round() as u64).max(1);
                crate::flavor::integrate(&stepper, &self.initial_state, t_end, Sampler::every(stride), seed)
            }
            Reference::ClosedForm(f) => {
                let n = crate::flavor::mesostep_count(t_end, sample_dt);
                let times: Vec<f64> = (0..=n).map(|k| k as f64 * sample_dt).collect();
                let states: Vec<Vec<f64>> = times.iter().map(|&t| f(t)).collect();
                let energies = self.model.hamiltonian().map(|h| states.iter().map(|u| h.energy_state(u)).collect());
                Ok(Trajectory {
                    fast_clock: times.clone(),
                    times,
                    states,
                    energies,
                    mesosteps: n,
                    legacy_calls: 0,
                    stiff_calls: 0,
                    seed,
                    delta: sample_dt,
                    tau: sample_dt,
                })
            }
        }
    }
}

fn failure(error: FlavorError, h: f64) -> Box<IntegrationFailure> {
    Box::new(IntegrationFailure {
        partial: Trajectory {
            times: vec![],
            fast_clock: vec![],
            states: vec![],
            energies: None,
            mesosteps: 0,
            legacy_calls: 0,
            stiff_calls: 0,
            seed: 0,
            delta: h,
            tau: h,
        },
        error,
    })
}

/// Names of all bundled benchmarks, in registry order.
pub const BENCHMARK_NAMES: [&str; 16] = [
    "linear",
    "triple-chain",
    "nonlinear-stiff-soft",
    "fpu-short",
    "fpu-long",
    "fpu-harmonic",
    "van-der-pol",
    "van-der-pol-cartesian",
    "primitive-md",
    "propane",
    "kapitza",
    "kapitza-unforced",
    "hidden-sde",
    "hidden-sde-separated",
    "langevin-slow",
    "langevin-fast",
];

/// Looks up a benchmark by name with its default parameters.
pub fn by_name(name: &str) -> Result<Benchmark> {
    match name {
        "linear" => linear_stability_problem(1000.0),
        "triple-chain" => triple_chain_problem(),
        "nonlinear-stiff-soft" => nonlinear_stiff_soft_problem(),
        "fpu-short" => fpu_short_problem(),
        "fpu-long" => fpu_long_problem(),
        "fpu-harmonic" => fpu_harmonic_problem(3, 100.0),
        "van-der-pol" => van_der_pol_hidden(),
        "van-der-pol-cartesian" => van_der_pol_cartesian(),
        "primitive-md" => primitive_md_problem(),
        "propane" => propane_problem(),
        "kapitza" => kapitza_problem(),
        "kapitza-unforced" => kapitza_with_forcing(0.0),
        "hidden-sde" => hidden_sde_problem(),
        "hidden-sde-separated" => hidden_sde_separated_problem(),
        "langevin-slow" => langevin_slow_problem(),
        "langevin-fast" => langevin_fast_problem(),
        _ => Err(FlavorError::InvalidInput(format!("unknown benchmark {name:?}"))),
    }
}

/// All bundled benchmarks.
pub fn all() -> Vec<Benchmark> {
    BENCHMARK_NAMES.iter().map(|n| by_name(n).expect("bundled benchmark must build")).collect()
}
