use rayon::prelude::*;

use super::accuracy::f_error;
use super::diagnostics::linear_fit;
use crate::error::{FlavorError, Result};
use crate::flavor::{integrate, Sampler, Trajectory};
use crate::problems::{Benchmark, Method, Reference};
use crate::system::{SlowObservable, StepSchedule};

/// Parameter swept by a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Mesostep sizes at the benchmark's default microstep.
    Delta(Vec<f64>),
    /// Horizons at the default schedule.
    Horizon(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub param: f64,
    pub error: f64,
    pub mesosteps: u64,
}

/// Errors per parameter value with a log-log power-law fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl ConvergenceTable {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Self {
        let (x, y): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| r.error > 0.0 && r.param > 0.0).map(|r| (r.param.ln(), r.error.ln())).unzip();
        let (slope, intercept, r2) = linear_fit(&x, &y);
        Self { rows, slope, intercept, r2 }
    }

    /// `max error / min error`.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self.rows.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), r| (l.min(r.error), h.max(r.error)));
        hi / lo
    }
}

fn run(stepper: &crate::flavor::FlavorStepper, u0: &[f64], t_end: f64) -> Result<Trajectory> {
    integrate(stepper, u0, t_end, Sampler::every(1), 0).map_err(|f| f.error)
}

/// Fine run of `method` at step `h`, every step recorded.
pub fn fine_reference(bench: &Benchmark, method: Method, h: f64, t_end: f64) -> Result<Trajectory> {
    let stepper = bench.stepper(method, StepSchedule::new(h, h)?)?;
    run(&stepper, &bench.initial_state, t_end)
}

/// The benchmark's own reference, sampled densely enough for windowed errors.
pub fn dense_reference(bench: &Benchmark, t_end: f64, window: f64) -> Result<Trajectory> {
    match &bench.reference {
        Reference::Fine { method, h } => fine_reference(bench, *method, *h, t_end),
        Reference::ClosedForm(_) => bench.reference_trajectory(t_end, window / 100.0, 0).map_err(|f| f.error),
    }
}

/// The prefix of `traj` up to time `t` (inclusive, to rounding).
pub fn truncate(traj: &Trajectory, t: f64) -> Trajectory {
    let k = traj.times.partition_point(|&s| s <= t * (1.0 + 1e-12) + 1e-12);
    let mut out = traj.clone();
    out.times.truncate(k);
    out.fast_clock.truncate(k);
    out.states.truncate(k);
    if let Some(e) = out.energies.as_mut() {
        e.truncate(k);
    }
    out
}

/// Windowed error of `method` against the benchmark reference across a sweep.
pub fn convergence_study(
    bench: &Benchmark,
    method: Method,
    sweep: &Sweep,
    window: f64,
    phi: &SlowObservable,
) -> Result<ConvergenceTable> {
    let tau = bench.default_schedule.tau();
    let rows = match sweep {
        Sweep::Delta(deltas) => {
            let reference = dense_reference(bench, bench.horizon, window)?;
            deltas
                .par_iter()
                .map(|&delta| {
                    let stepper = bench.stepper(method, StepSchedule::new(tau, delta)?)?;
                    let traj = run(&stepper, &bench.initial_state, bench.horizon)?;
                    Ok(ConvergenceRow {
                        param: delta,
                        error: f_error(&traj, &reference, phi, window)?,
                        mesosteps: traj.mesosteps,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Sweep::Horizon(horizons) => {
            let t_max = horizons.iter().copied().fold(0.0, f64::max);
            if !(t_max > 0.0) {
                return Err(FlavorError::InvalidInput("horizons must be positive".into()));
            }
            let reference = dense_reference(bench, t_max, window)?;
            let traj = run(&bench.stepper(method, bench.default_schedule)?, &bench.initial_state, t_max)?;
            horizons
                .iter()
                .map(|&t| {
                    let (a, b) = (truncate(&traj, t), truncate(&reference, t));
                    Ok(ConvergenceRow { param: t, error: f_error(&a, &b, phi, window)?, mesosteps: a.len() as u64 - 1 })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(ConvergenceTable::from_rows(rows))
}

/// Windowed error at a fixed mesostep across stiffness parameters.
///
/// `build(omega)` constructs the benchmark and `tau(omega)` the microstep;
/// each point is compared with the fine run of `fine` at step `tau(omega)`.
pub fn omega_sweep<B, T>(
    omegas: &[f64],
    build: B,
    tau: T,
    delta: f64,
    method: Method,
    fine: Method,
    window: f64,
    observable: &str,
) -> Result<ConvergenceTable>
where
    B: Fn(f64) -> Result<Benchmark> + Sync,
    T: Fn(f64) -> f64 + Sync,
{
    let rows = omegas
        .par_iter()
        .map(|&omega| {
            let bench = build(omega)?;
            let phi = bench
                .observable(observable)
                .ok_or_else(|| FlavorError::InvalidInput(format!("unknown observable {observable:?}")))?;
            let h = tau(omega);
            let stepper = bench.stepper(method, StepSchedule::new(h, delta)?)?;
            let traj = run(&stepper, &bench.initial_state, bench.horizon)?;
            let reference = fine_reference(&bench, fine, h, bench.horizon)?;
            Ok(ConvergenceRow {
                param: omega,
                error: f_error(&traj, &reference, phi, window)?,
                mesosteps: traj.mesosteps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_rows(rows))
}
