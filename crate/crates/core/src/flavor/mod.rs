//! FLAVOR steppers: legacy maps composed with the stiff parameter switched
//! on for a microstep `tau` and off for the rest of a mesostep `delta`.
//!
//! A stepper is an immutable recipe of stages. Each stage applies one legacy
//! map over a step size at a fixed stiffness and reads its start time from
//! either the slow clock (`k delta`) or the fast clock (`k tau`). Stochastic
//! stages draw from a per-(trajectory, mesostep) stream in recipe order.

mod constraint;
mod integrate;

use std::sync::Arc;

pub use constraint::{ConstrainedFlight, ConstraintSpec, LinearFlight};
pub use integrate::{integrate, integrate_ensemble, mesostep_count, IntegrationFailure, Sampler, Trajectory};

use crate::error::{FlavorError, Result};
use crate::legacy::{
    ForcedSymplecticEuler, OneStepMap, OuExactFlow, SoftKick, StochasticOneStepMap, SymplecticEulerAdjoint,
};
use crate::noise::{mesostep_rng, NoiseRng};
use crate::system::{
    ExactFastFlow, ForcedHamiltonian, LangevinSystem, NoisePlacement, ScalarField, SeparatedHamiltonian, StepSchedule,
    StiffnessExponent,
};
use constraint::FlightMap;

/// Recipe family of a stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepperKind {
    Nonintrusive,
    Reversible,
    Artificial,
    Sde,
    LangevinSlow,
    LangevinFast,
    LangevinReversibleSlow,
    LangevinReversibleFast,
    Nonautonomous,
    /// A single-scale legacy integrator (no switching).
    Legacy,
}

impl StepperKind {
    /// Scaling of the microstep needed for accuracy: the nonintrusive
    /// Hamiltonian scheme must resolve `eps`, the artificial one only `sqrt(eps)`.
    pub fn stiffness_exponent(self) -> StiffnessExponent {
        match self {
            Self::Artificial
            | Self::LangevinSlow
            | Self::LangevinFast
            | Self::LangevinReversibleSlow
            | Self::LangevinReversibleFast => StiffnessExponent::Half,
            _ => StiffnessExponent::One,
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Self::Sde
                | Self::LangevinSlow
                | Self::LangevinFast
                | Self::LangevinReversibleSlow
                | Self::LangevinReversibleFast
        )
    }
}

/// Which clock a stage reads its start time from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// `k delta + offset`
    Slow,
    /// `k tau + offset`
    Fast,
}

#[derive(Clone)]
pub enum StageOp {
    Map(Arc<dyn OneStepMap>),
    Noisy(Arc<dyn StochasticOneStepMap>),
}

#[derive(Clone)]
pub struct Stage {
    pub op: StageOp,
    pub h: f64,
    pub alpha: f64,
    pub clock: Clock,
    pub offset: f64,
}

impl Stage {
    pub fn map(map: Arc<dyn OneStepMap>, h: f64, alpha: f64, offset: f64) -> Self {
        Self { op: StageOp::Map(map), h, alpha, clock: Clock::Slow, offset }
    }

    pub fn noisy(map: Arc<dyn StochasticOneStepMap>, h: f64, alpha: f64, offset: f64) -> Self {
        Self { op: StageOp::Noisy(map), h, alpha, clock: Clock::Slow, offset }
    }

    pub fn on_fast_clock(mut self) -> Self {
        self.clock = Clock::Fast;
        self
    }

    fn name(&self) -> &'static str {
        match &self.op {
            StageOp::Map(m) => m.name(),
            StageOp::Noisy(m) => m.name(),
        }
    }
}

impl std::fmt::Debug for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stage")
            .field("map", &self.name())
            .field("h", &self.h)
            .field("alpha", &self.alpha)
            .field("clock", &self.clock)
            .field("offset", &self.offset)
            .finish()
    }
}

/// Fast substep of the artificial FLAVOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastSubstep {
    /// Closed-form flow of the stiff subsystem registered on the Hamiltonian.
    Exact,
    /// Position-first symplectic Euler on `kinetic + U/eps`.
    SymplecticEuler,
}

struct ExactFastMap {
    dim: usize,
    flow: Arc<dyn ExactFastFlow>,
}

impl OneStepMap for ExactFastMap {
    fn name(&self) -> &'static str {
        "exact-fast-flow"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64) -> Result<()> {
        crate::legacy::check_len(u, self.dim)?;
        if h == 0.0 {
            return Ok(());
        }
        self.flow.flow(u, h, alpha);
        crate::legacy::ensure_finite(u)
    }
}

/// An immutable multiscale stepper advancing the state by `delta` per call.
#[derive(Clone)]
pub struct FlavorStepper {
    kind: StepperKind,
    schedule: StepSchedule,
    stages: Vec<Stage>,
    dim: usize,
    energy: Option<ScalarField>,
}

impl std::fmt::Debug for FlavorStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlavorStepper")
            .field("kind", &self.kind)
            .field("schedule", &self.schedule)
            .field("stages", &self.stages)
            .finish()
    }
}

fn map_dim(op: &StageOp) -> usize {
    match op {
        StageOp::Map(m) => m.dim(),
        StageOp::Noisy(m) => m.dim(),
    }
}

impl FlavorStepper {
    /// Builds a stepper from an explicit recipe.
    pub fn from_stages(kind: StepperKind, schedule: StepSchedule, stages: Vec<Stage>) -> Result<Self> {
        let first = stages.first().ok_or_else(|| FlavorError::InvalidInput("empty recipe".into()))?;
        let dim = map_dim(&first.op);
        if stages.iter().any(|s| map_dim(&s.op) != dim) {
            return Err(FlavorError::LayoutMismatch("stages disagree on the state dimension".into()));
        }
        if stages.iter().any(|s| !(s.h >= 0.0 && s.h.is_finite())) {
            return Err(FlavorError::InvalidSchedule("stage step sizes must be finite and non-negative".into()));
        }
        Ok(Self { kind, schedule, stages, dim, energy: None })
    }

    /// `Phi^0_{delta - tau} o Phi^{1/eps}_tau`.
    pub fn nonintrusive(legacy: Arc<dyn OneStepMap>, schedule: StepSchedule, epsilon: f64) -> Result<Self> {
        let (tau, delta) = (schedule.tau(), schedule.delta());
        Self::from_stages(
            StepperKind::Nonintrusive,
            schedule,
            vec![Stage::map(legacy.clone(), tau, 1.0 / epsilon, 0.0), Stage::map(legacy, delta - tau, 0.0, tau)],
        )
    }

    /// `Phi^{1/eps,*}_{tau/2} o Phi^{0,*}_{(delta-tau)/2} o Phi^0_{(delta-tau)/2} o Phi^{1/eps}_{tau/2}`.
    pub fn reversible(legacy: Arc<dyn OneStepMap>, schedule: StepSchedule, epsilon: f64) -> Result<Self> {
        let adjoint = legacy.adjoint().ok_or(FlavorError::AdjointMissing)?;
        let (tau, delta) = (schedule.tau(), schedule.delta());
        let (a, b) = (0.5 * tau, 0.5 * (delta - tau));
        let stiff = 1.0 / epsilon;
        Self::from_stages(
            StepperKind::Reversible,
            schedule,
            vec![
                Stage::map(legacy.clone(), a, stiff, 0.0),
                Stage::map(legacy, b, 0.0, a),
                Stage::map(adjoint.clone(), b, 0.0, a + b),
                Stage::map(adjoint, a, stiff, a + 2.0 * b),
            ],
        )
    }

    /// `theta^tr_{delta-tau} o theta^eps_tau o theta^V_delta`: soft kick over
    /// `delta`, stiff substep over `tau`, constrained free flight over `delta - tau`.
    pub fn artificial(
        ham: Arc<SeparatedHamiltonian>,
        constraints: &ConstraintSpec,
        schedule: StepSchedule,
        fast: FastSubstep,
    ) -> Result<Self> {
        let dim = ham.dim();
        let fast_map: Arc<dyn OneStepMap> = match fast {
            FastSubstep::Exact => Arc::new(ExactFastMap {
                dim,
                flow: ham.exact_fast_flow().cloned().ok_or(FlavorError::NoExactFastFlow)?,
            }),
            FastSubstep::SymplecticEuler => Arc::new(SymplecticEulerAdjoint::new(Arc::new(ham.stiff_part()))),
        };
        let flight: Arc<dyn ConstrainedFlight> = match constraints {
            ConstraintSpec::LinearFreeze(a) => Arc::new(LinearFlight::new(&ham, a)?),
            ConstraintSpec::Custom(f) => f.clone(),
        };
        let (tau, delta) = (schedule.tau(), schedule.delta());
        let stiff = 1.0 / ham.epsilon();
        Self::from_stages(
            StepperKind::Artificial,
            schedule,
            vec![
                Stage::map(Arc::new(SoftKick::new(ham.clone())), delta, 0.0, 0.0),
                Stage::map(fast_map, tau, stiff, 0.0),
                Stage::map(Arc::new(FlightMap { dim, flight }), delta - tau, 0.0, tau),
            ],
        )
    }

    /// `Phi^0_{delta-tau}(., w'_k) o Phi^{1/eps}_tau(., w_k)` with independent noise blocks.
    pub fn sde(legacy: Arc<dyn StochasticOneStepMap>, schedule: StepSchedule, epsilon: f64) -> Result<Self> {
        let (tau, delta) = (schedule.tau(), schedule.delta());
        Self::from_stages(
            StepperKind::Sde,
            schedule,
            vec![Stage::noisy(legacy.clone(), tau, 1.0 / epsilon, 0.0), Stage::noisy(legacy, delta - tau, 0.0, tau)],
        )
    }

    /// Langevin FLAVOR with exact OU substeps.
    ///
    /// Slow noise: OU over `tau`, stiff substep, OU over `delta - tau`, soft substep.
    /// Fast noise: OU at rate `1/eps` over `tau`, stiff substep, soft substep.
    pub fn langevin(ls: &LangevinSystem, legacy: Arc<dyn OneStepMap>, schedule: StepSchedule) -> Result<Self> {
        let ou: Arc<dyn StochasticOneStepMap> = Arc::new(OuExactFlow::for_langevin(ls)?);
        let (tau, delta) = (schedule.tau(), schedule.delta());
        let stiff = 1.0 / ls.hamiltonian.epsilon();
        let (kind, stages) = match ls.noise_placement {
            NoisePlacement::Slow => (
                StepperKind::LangevinSlow,
                vec![
                    Stage::noisy(ou.clone(), tau, 1.0, 0.0),
                    Stage::map(legacy.clone(), tau, stiff, 0.0),
                    Stage::noisy(ou, delta - tau, 1.0, tau),
                    Stage::map(legacy, delta - tau, 0.0, tau),
                ],
            ),
            NoisePlacement::Fast => (
                StepperKind::LangevinFast,
                vec![
                    Stage::noisy(ou, tau, stiff, 0.0),
                    Stage::map(legacy.clone(), tau, stiff, 0.0),
                    Stage::map(legacy, delta - tau, 0.0, tau),
                ],
            ),
        };
        Self::from_stages(kind, schedule, stages)
    }

    /// Symmetric Strang splitting of the Langevin FLAVOR with OU halves at both ends.
    pub fn langevin_reversible(
        ls: &LangevinSystem,
        legacy: Arc<dyn OneStepMap>,
        schedule: StepSchedule,
    ) -> Result<Self> {
        let adjoint = legacy.adjoint().ok_or(FlavorError::AdjointMissing)?;
        let ou: Arc<dyn StochasticOneStepMap> = Arc::new(OuExactFlow::for_langevin(ls)?);
        let (tau, delta) = (schedule.tau(), schedule.delta());
        let stiff = 1.0 / ls.hamiltonian.epsilon();
        let (a, b) = (0.5 * tau, 0.5 * (delta - tau));
        let (kind, ou_h, ou_alpha) = match ls.noise_placement {
            NoisePlacement::Slow => (StepperKind::LangevinReversibleSlow, 0.5 * delta, 1.0),
            NoisePlacement::Fast => (StepperKind::LangevinReversibleFast, 0.5 * tau, stiff),
        };
        Self::from_stages(
            kind,
            schedule,
            vec![
                Stage::noisy(ou.clone(), ou_h, ou_alpha, 0.0),
                Stage::map(legacy.clone(), a, stiff, 0.0),
                Stage::map(legacy, b, 0.0, a),
                Stage::map(adjoint.clone(), b, 0.0, a + b),
                Stage::map(adjoint, a, stiff, a + 2.0 * b),
                Stage::noisy(ou, ou_h, ou_alpha, delta - ou_h),
            ],
        )
    }

    /// Forced FLAVOR: the stiff substep sees the fast forcing at the fast
    /// clock `k tau`; the soft substep runs without it.
    pub fn nonautonomous(sys: Arc<ForcedHamiltonian>, schedule: StepSchedule) -> Result<Self> {
        let map: Arc<dyn OneStepMap> = Arc::new(ForcedSymplecticEuler::new(sys.clone()));
        let (tau, delta) = (schedule.tau(), schedule.delta());
        Self::from_stages(
            StepperKind::Nonautonomous,
            schedule,
            vec![
                Stage::map(map.clone(), tau, 1.0 / sys.hamiltonian.epsilon(), 0.0).on_fast_clock(),
                Stage::map(map, delta - tau, 0.0, tau),
            ],
        )
    }

    /// One legacy step of size `h` at stiffness `alpha` per call.
    pub fn legacy(map: Arc<dyn OneStepMap>, h: f64, alpha: f64) -> Result<Self> {
        Self::from_stages(StepperKind::Legacy, StepSchedule::new(h, h)?, vec![Stage::map(map, h, alpha, 0.0)])
    }

    /// `Phi*_{h/2} o Phi_{h/2}` at stiffness `alpha`.
    pub fn legacy_strang(map: Arc<dyn OneStepMap>, h: f64, alpha: f64) -> Result<Self> {
        let adjoint = map.adjoint().ok_or(FlavorError::AdjointMissing)?;
        Self::from_stages(
            StepperKind::Legacy,
            StepSchedule::new(h, h)?,
            vec![Stage::map(map, 0.5 * h, alpha, 0.0), Stage::map(adjoint, 0.5 * h, alpha, 0.5 * h)],
        )
    }

    /// One stochastic legacy step per call.
    pub fn legacy_stochastic(map: Arc<dyn StochasticOneStepMap>, h: f64, alpha: f64) -> Result<Self> {
        Self::from_stages(StepperKind::Legacy, StepSchedule::new(h, h)?, vec![Stage::noisy(map, h, alpha, 0.0)])
    }

    /// Legacy forced map on the fast clock (`tau = delta = h`).
    pub fn legacy_forced(sys: Arc<ForcedHamiltonian>, h: f64) -> Result<Self> {
        let map: Arc<dyn OneStepMap> = Arc::new(ForcedSymplecticEuler::new(sys.clone()));
        Self::from_stages(
            StepperKind::Legacy,
            StepSchedule::new(h, h)?,
            vec![Stage::map(map, h, 1.0 / sys.hamiltonian.epsilon(), 0.0).on_fast_clock()],
        )
    }

    /// Attaches an energy function recorded along trajectories.
    pub fn with_energy(mut self, energy: ScalarField) -> Self {
        self.energy = Some(energy);
        self
    }

    pub fn kind(&self) -> StepperKind {
        self.kind
    }
    pub fn schedule(&self) -> StepSchedule {
        self.schedule
    }
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn energy(&self, u: &[f64]) -> Option<f64> {
        self.energy.as_ref().map(|e| e(u))
    }
    pub fn has_energy(&self) -> bool {
        self.energy.is_some()
    }

    pub fn is_stochastic(&self) -> bool {
        self.stages.iter().any(|s| matches!(s.op, StageOp::Noisy(_)))
    }

    /// True if the recipe reads the same backwards with adjoint maps.
    pub fn is_palindromic(&self) -> bool {
        let n = self.stages.len();
        (0..n / 2).all(|i| {
            let (a, b) = (&self.stages[i], &self.stages[n - 1 - i]);
            a.h == b.h && a.alpha == b.alpha
        })
    }

    /// Legacy-map invocations with a nonzero step, per mesostep.
    pub fn legacy_calls_per_step(&self) -> u64 {
        self.stages.iter().filter(|s| s.h > 0.0).count() as u64
    }

    /// Invocations with the stiff part switched on, per mesostep.
    pub fn stiff_calls_per_step(&self) -> u64 {
        self.stages.iter().filter(|s| s.h > 0.0 && s.alpha != 0.0 && matches!(s.op, StageOp::Map(_))).count() as u64
    }

    /// Sum of the slow-clock stage sizes of the deterministic maps.
    pub fn deterministic_step_total(&self) -> f64 {
        self.stages.iter().filter(|s| matches!(s.op, StageOp::Map(_))).map(|s| s.h).sum()
    }

    /// Advances `u` by one mesostep with index `k`. Noise comes from the
    /// stream of `(trajectory_seed, k)`, so equal inputs give equal outputs.
    pub fn mesostep(&self, u: &mut [f64], k: u64, trajectory_seed: u64) -> Result<()> {
        let mut rng = if self.is_stochastic() { Some(mesostep_rng(trajectory_seed, k)) } else { None };
        self.mesostep_with(u, k, rng.as_mut())
    }

    pub(crate) fn mesostep_with(&self, u: &mut [f64], k: u64, mut rng: Option<&mut NoiseRng>) -> Result<()> {
        let slow = k as f64 * self.schedule.delta();
        let fast = k as f64 * self.schedule.tau();
        for stage in &self.stages {
            let t = match stage.clock {
                Clock::Slow => slow + stage.offset,
                Clock::Fast => fast + stage.offset,
            };
            let res = match &stage.op {
                StageOp::Map(m) => m.step(u, stage.h, stage.alpha, t),
                StageOp::Noisy(m) => {
                    let rng =
                        rng.as_deref_mut().ok_or_else(|| FlavorError::InvalidInput("missing noise stream".into()))?;
                    m.step(u, stage.h, stage.alpha, t, rng)
                }
            };
            res.map_err(|e| match e {
                FlavorError::NonFiniteState { .. } => FlavorError::NonFiniteState { step: Some(k) },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Out-of-place single mesostep.
    pub fn apply(&self, u: &[f64], k: u64, trajectory_seed: u64) -> Result<Vec<f64>> {
        let mut v = u.to_vec();
        self.mesostep(&mut v, k, trajectory_seed)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests;
