use rayon::prelude::*;
use thiserror::Error;

use super::FlavorStepper;
use crate::error::FlavorError;
use crate::noise::{mesostep_rng, trajectory_seed};

/// Which mesostep boundaries to record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampler {
    /// Record every `stride`-th mesostep; the initial and final states are always kept.
    pub stride: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { stride: 1 }
    }
}

impl Sampler {
    pub fn every(stride: u64) -> Self {
        Self { stride: stride.max(1) }
    }
}

/// States sampled at mesostep boundaries plus run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fast_clock: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
    /// Mesosteps actually taken.
    pub mesosteps: u64,
    pub legacy_calls: u64,
    pub stiff_calls: u64,
    pub seed: u64,
    pub delta: f64,
    pub tau: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Time series of component `i`.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// Time series of a scalar function of the state.
    pub fn series(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.states.iter().map(|s| f(s)).collect()
    }

    fn push(&mut self, k: u64, u: &[f64], stepper: &FlavorStepper) {
        self.times.push(k as f64 * self.delta);
        self.fast_clock.push(k as f64 * self.tau);
        self.states.push(u.to_vec());
        if let (Some(e), Some(v)) = (stepper.energy(u), self.energies.as_mut()) {
            v.push(e);
        }
    }
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug, Clone, Error)]
#[error("integration failed: {error}")]
pub struct IntegrationFailure {
    pub partial: Trajectory,
    pub error: FlavorError,
}

/// Number of mesosteps covering `[0, t_end]`, tolerant to rounding in `t_end / delta`.
pub fn mesostep_count(t_end: f64, delta: f64) -> u64 {
    let r = t_end / delta;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * r.max(1.0) {
        n as u64
    } else {
        r.floor() as u64
    }
}

/// Runs `stepper` from `u0` up to `t_end`.
///
/// Takes `t_end / delta` mesosteps (rounded down unless within rounding
/// noise of an integer). Stochastic steppers use the trajectory seed `seed`.
pub fn integrate(
    stepper: &FlavorStepper,
    u0: &[f64],
    t_end: f64,
    sampler: Sampler,
    seed: u64,
) -> Result<Trajectory, Box<IntegrationFailure>> {
    let schedule = stepper.schedule();
    let mut traj = Trajectory {
        times: Vec::new(),
        fast_clock: Vec::new(),
        states: Vec::new(),
        energies: stepper.has_energy().then(Vec::new),
        mesosteps: 0,
        legacy_calls: 0,
        stiff_calls: 0,
        seed,
        delta: schedule.delta(),
        tau: schedule.tau(),
    };
    let fail = |traj: Trajectory, error| Err(Box::new(IntegrationFailure { partial: traj, error }));
    if !(t_end > 0.0) {
        return fail(traj, FlavorError::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    if u0.len() != stepper.dim() {
        return fail(
            traj,
            FlavorError::LayoutMismatch(format!("initial state has length {}, expected {}", u0.len(), stepper.dim())),
        );
    }
    let n = mesostep_count(t_end, schedule.delta());
    let stride = sampler.stride.max(1);
    let (legacy_per, stiff_per) = (stepper.legacy_calls_per_step(), stepper.stiff_calls_per_step());
    let stochastic = stepper.is_stochastic();
    let mut u = u0.to_vec();
    traj.push(0, &u, stepper);
    for k in 0..n {
        let res = if stochastic {
            let mut rng = mesostep_rng(seed, k);
            stepper.mesostep_with(&mut u, k, Some(&mut rng))
        } else {
            stepper.mesostep_with(&mut u, k, None)
        };
        if let Err(e) = res {
            return fail(traj, e);
        }
        traj.mesosteps = k + 1;
        traj.legacy_calls += legacy_per;
        traj.stiff_calls += stiff_per;
        if (k + 1) % stride == 0 || k + 1 == n {
            traj.push(k + 1, &u, stepper);
        }
    }
    Ok(traj)
}

/// Runs `n` trajectories in parallel; trajectory `i` uses seed
/// `trajectory_seed(base_seed, i)`. Results are in index order.
pub fn integrate_ensemble(
    stepper: &FlavorStepper,
    u0: &[f64],
    t_end: f64,
    sampler: Sampler,
    base_seed: u64,
    n: usize,
) -> Vec<Result<Trajectory, Box<IntegrationFailure>>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| integrate(stepper, u0, t_end, sampler, trajectory_seed(base_seed, i)))
        .collect()
}
