//! Problem descriptions shared by every integrator: split vector fields,
//! separated Hamiltonians, Langevin and SDE systems, step schedules and
//! slow observables.
//!
//! States are flat `f64` slices. Hamiltonian states are laid out as
//! `[q_1 .. q_n, p_1 .. p_n]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FlavorError, Result};

/// `f(u, out)`: writes a vector field evaluated at `u` into `out`.
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `f(u, out)`: writes a row-major `dim x dim` matrix into `out`.
pub type MatrixField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Scalar potential on configuration space.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `drift(u, alpha, epsilon, t, out)`.
pub type ParametricDrift = Arc<dyn Fn(&[f64], f64, f64, f64, &mut [f64]) + Send + Sync>;
/// `diffusion(u, alpha, epsilon, t, out)` with `out` row-major `dim x dim`.
pub type ParametricDiffusion = Arc<dyn Fn(&[f64], f64, f64, f64, &mut [f64]) + Send + Sync>;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(FlavorError::InvalidInput(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

/// A deterministic model `u' = drift(u, alpha, t)` with a switchable stiffness `alpha`.
///
/// `alpha = 1/epsilon` is the physical system, `alpha = 0` the system with
/// the stiff part switched off.
pub trait DriftModel: Send + Sync {
    fn dim(&self) -> usize;
    fn epsilon(&self) -> f64;
    fn drift(&self, u: &[f64], alpha: f64, t: f64, out: &mut [f64]);
}

/// A stochastic model: drift plus a square diffusion matrix (row-major).
pub trait SdeModel: DriftModel {
    fn diffusion(&self, u: &[f64], alpha: f64, t: f64, out: &mut [f64]);
}

/// `u' = G(u) + (1/eps) F(u)`.
#[derive(Clone)]
pub struct StiffSplitSystem {
    dim: usize,
    soft: VectorField,
    stiff: VectorField,
    epsilon: f64,
}

impl StiffSplitSystem {
    pub fn new(dim: usize, soft: VectorField, stiff: VectorField, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(FlavorError::InvalidInput("dim must be at least 1".into()));
        }
        check_epsilon(epsilon)?;
        Ok(Self { dim, soft, stiff, epsilon })
    }

    pub fn soft_drift(&self, u: &[f64], out: &mut [f64]) {
        (self.soft)(u, out)
    }

    pub fn stiff_drift(&self, u: &[f64], out: &mut [f64]) {
        (self.stiff)(u, out)
    }
}

impl fmt::Debug for StiffSplitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StiffSplitSystem").field("dim", &self.dim).field("epsilon", &self.epsilon).finish()
    }
}

/// Adds `alpha * stiff(u)` into `out`, skipping the evaluation when `alpha == 0`.
fn add_scaled(stiff: &VectorField, u: &[f64], alpha: f64, out: &mut [f64]) {
    if alpha == 0.0 {
        return;
    }
    let mut buf = smallvec::SmallVec::<[f64; 16]>::from_elem(0.0, out.len());
    stiff(u, &mut buf);
    for (o, b) in out.iter_mut().zip(buf.iter()) {
        *o += alpha * b;
    }
}

impl DriftModel for StiffSplitSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn drift(&self, u: &[f64], alpha: f64, _t: f64, out: &mut [f64]) {
        (self.soft)(u, out);
        add_scaled(&self.stiff, u, alpha, out);
    }
}

/// Generic `u' = F(u, alpha, eps, t)` with optional diffusion `K(u, alpha, eps, t)`.
#[derive(Clone)]
pub struct ParametricSystem {
    dim: usize,
    epsilon: f64,
    drift: ParametricDrift,
    diffusion: Option<ParametricDiffusion>,
    time_dependent: bool,
}

impl ParametricSystem {
    pub fn new(dim: usize, epsilon: f64, drift: ParametricDrift) -> Result<Self> {
        if dim == 0 {
            return Err(FlavorError::InvalidInput("dim must be at least 1".into()));
        }
        check_epsilon(epsilon)?;
        Ok(Self { dim, epsilon, drift, diffusion: None, time_dependent: false })
    }

    pub fn with_diffusion(mut self, diffusion: ParametricDiffusion) -> Self {
        self.diffusion = Some(diffusion);
        self
    }

    pub fn time_dependent(mut self, flag: bool) -> Self {
        self.time_dependent = flag;
        self
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn has_diffusion(&self) -> bool {
        self.diffusion.is_some()
    }
}

impl fmt::Debug for ParametricSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricSystem")
            .field("dim", &self.dim)
            .field("epsilon", &self.epsilon)
            .field("stochastic", &self.diffusion.is_some())
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl DriftModel for ParametricSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn drift(&self, u: &[f64], alpha: f64, t: f64, out: &mut [f64]) {
        let t = if self.time_dependent { t } else { 0.0 };
        (self.drift)(u, alpha, self.epsilon, t, out)
    }
}

impl SdeModel for ParametricSystem {
    fn diffusion(&self, u: &[f64], alpha: f64, t: f64, out: &mut [f64]) {
        let t = if self.time_dependent { t } else { 0.0 };
        match &self.diffusion {
            Some(k) => k(u, alpha, self.epsilon, t, out),
            None => out.fill(0.0),
        }
    }
}

/// `du = (G + F/eps) dt + (H + K/sqrt(eps)) dW`.
#[derive(Clone)]
pub struct SdeSplitSystem {
    dim: usize,
    soft_drift: VectorField,
    stiff_drift: VectorField,
    soft_diffusion: MatrixField,
    stiff_diffusion: MatrixField,
    epsilon: f64,
}

impl SdeSplitSystem {
    pub fn new(
        dim: usize,
        soft_drift: VectorField,
        stiff_drift: VectorField,
        soft_diffusion: MatrixField,
        stiff_diffusion: MatrixField,
        epsilon: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(FlavorError::InvalidInput("dim must be at least 1".into()));
        }
        check_epsilon(epsilon)?;
        Ok(Self { dim, soft_drift, stiff_drift, soft_diffusion, stiff_diffusion, epsilon })
    }
}

impl fmt::Debug for SdeSplitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeSplitSystem").field("dim", &self.dim).field("epsilon", &self.epsilon).finish()
    }
}

impl DriftModel for SdeSplitSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn drift(&self, u: &[f64], alpha: f64, _t: f64, out: &mut [f64]) {
        (self.soft_drift)(u, out);
        add_scaled(&self.stiff_drift, u, alpha, out);
    }
}

impl SdeModel for SdeSplitSystem {
    /// `H(u) + sqrt(alpha) K(u)`.
    fn diffusion(&self, u: &[f64], alpha: f64, _t: f64, out: &mut [f64]) {
        (self.soft_diffusion)(u, out);
        if alpha != 0.0 {
            let mut buf = vec![0.0; out.len()];
            (self.stiff_diffusion)(u, &mut buf);
            let s = alpha.sqrt();
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += s * b;
            }
        }
    }
}

/// Constant symmetric positive-definite mass matrix with a cached inverse.
#[derive(Debug, Clone, PartialEq)]
pub enum MassMatrix {
    Diagonal { mass: Vec<f64>, inverse: Vec<f64> },
    Dense { mass: DMatrix<f64>, inverse: DMatrix<f64> },
}

impl MassMatrix {
    pub fn identity(n: usize) -> Self {
        Self::Diagonal { mass: vec![1.0; n], inverse: vec![1.0; n] }
    }

    pub fn diagonal(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || mass.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(FlavorError::InvalidInput("diagonal masses must be positive".into()));
        }
        let inverse = mass.iter().map(|m| 1.0 / m).collect();
        Ok(Self::Diagonal { mass, inverse })
    }

    pub fn dense(mass: DMatrix<f64>) -> Result<Self> {
        if !mass.is_square() || mass.nrows() == 0 {
            return Err(FlavorError::InvalidInput("mass matrix must be square".into()));
        }
        let scale = mass.amax().max(f64::MIN_POSITIVE);
        if (&mass - mass.transpose()).amax() > 1e-12 * scale {
            return Err(FlavorError::InvalidInput("mass matrix must be symmetric".into()));
        }
        let chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| FlavorError::DecompositionFailure("mass matrix is not positive definite".into()))?;
        let inverse = chol.inverse();
        Ok(Self::Dense { mass, inverse })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal { mass, .. } => mass.len(),
            Self::Dense { mass, .. } => mass.nrows(),
        }
    }

    /// Diagonal entries if the matrix is diagonal.
    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match self {
            Self::Diagonal { mass, .. } => Some(mass),
            Self::Dense { .. } => None,
        }
    }

    /// `out = M^{-1} p`.
    #[inline]
    pub fn apply_inverse(&self, p: &[f64], out: &mut [f64]) {
        match self {
            Self::Diagonal { inverse, .. } => {
                for ((o, pi), w) in out.iter_mut().zip(p).zip(inverse) {
                    *o = pi * w;
                }
            }
            Self::Dense { inverse, .. } => {
                let n = inverse.nrows();
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    *o = (0..n).map(|j| inverse[(i, j)] * p[j]).sum();
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Diagonal { mass, .. } => DMatrix::from_diagonal(&DVector::from_column_slice(mass)),
            Self::Dense { mass, .. } => mass.clone(),
        }
    }

    pub fn inverse_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Diagonal { inverse, .. } => DMatrix::from_diagonal(&DVector::from_column_slice(inverse)),
            Self::Dense { inverse, .. } => inverse.clone(),
        }
    }

    /// `1/2 p^T M^{-1} p`.
    pub fn kinetic(&self, p: &[f64]) -> f64 {
        let mut v = vec![0.0; p.len()];
        self.apply_inverse(p, &mut v);
        0.5 * p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Closed-form flow of the stiff subsystem `1/2 p^T M^{-1} p + alpha U(q)`.
pub trait ExactFastFlow: Send + Sync {
    /// Advances the full `[q, p]` state by `h` in place.
    fn flow(&self, u: &mut [f64], h: f64, alpha: f64);
}

/// `H(q, p) = 1/2 p^T M^{-1} p + V(q) + U(q)/eps`.
#[derive(Clone)]
pub struct SeparatedHamiltonian {
    n_dof: usize,
    mass: MassMatrix,
    soft_potential: ScalarField,
    soft_gradient: VectorField,
    stiff_potential: ScalarField,
    stiff_gradient: VectorField,
    epsilon: f64,
    fast_flow: Option<Arc<dyn ExactFastFlow>>,
}

impl fmt::Debug for SeparatedHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparatedHamiltonian")
            .field("n_dof", &self.n_dof)
            .field("mass", &self.mass)
            .field("epsilon", &self.epsilon)
            .field("exact_fast_flow", &self.fast_flow.is_some())
            .finish()
    }
}

impl SeparatedHamiltonian {
    pub fn new(
        mass: MassMatrix,
        soft_potential: ScalarField,
        soft_gradient: VectorField,
        stiff_potential: ScalarField,
        stiff_gradient: VectorField,
        epsilon: f64,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            n_dof: mass.dim(),
            mass,
            soft_potential,
            soft_gradient,
            stiff_potential,
            stiff_gradient,
            epsilon,
            fast_flow: None,
        })
    }

    /// Registers a closed-form flow for the stiff subsystem.
    pub fn with_exact_fast_flow(mut self, flow: Arc<dyn ExactFastFlow>) -> Self {
        self.fast_flow = Some(flow);
        self
    }

    /// The same system with the soft potential removed (`V = 0`).
    pub fn stiff_part(&self) -> Self {
        let n = self.n_dof;
        let mut h = self.clone();
        h.soft_potential = Arc::new(|_q: &[f64]| 0.0);
        h.soft_gradient = Arc::new(move |_q: &[f64], out: &mut [f64]| out[..n].fill(0.0));
        h
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }
    pub fn dim(&self) -> usize {
        2 * self.n_dof
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }
    pub fn exact_fast_flow(&self) -> Option<&Arc<dyn ExactFastFlow>> {
        self.fast_flow.as_ref()
    }

    pub fn soft_potential(&self, q: &[f64]) -> f64 {
        (self.soft_potential)(q)
    }
    pub fn stiff_potential(&self, q: &[f64]) -> f64 {
        (self.stiff_potential)(q)
    }
    pub fn soft_gradient(&self, q: &[f64], out: &mut [f64]) {
        (self.soft_gradient)(q, out)
    }
    pub fn stiff_gradient(&self, q: &[f64], out: &mut [f64]) {
        (self.stiff_gradient)(q, out)
    }

    /// `out = grad V(q) + alpha grad U(q)`; `U` is not evaluated when `alpha == 0`.
    #[inline]
    pub fn force_gradient(&self, q: &[f64], alpha: f64, out: &mut [f64]) {
        (self.soft_gradient)(q, out);
        add_scaled(&self.stiff_gradient, q, alpha, out);
    }

    pub fn energy(&self, q: &[f64], p: &[f64]) -> f64 {
        self.mass.kinetic(p) + self.soft_potential(q) + self.stiff_potential(q) / self.epsilon
    }

    /// Energy of a flat `[q, p]` state.
    pub fn energy_state(&self, u: &[f64]) -> f64 {
        let (q, p) = u.split_at(self.n_dof);
        self.energy(q, p)
    }
}

/// `f(t, q, out)`: explicitly time-dependent force on the fast time scale.
pub type Forcing = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Separated Hamiltonian plus a nonautonomous fast force.
///
/// The forcing is switched together with the stiff potential: it enters the
/// momentum update as `+ alpha * f(t, q)`, so it is active only while the
/// stiff part is on.
#[derive(Clone)]
pub struct ForcedHamiltonian {
    pub hamiltonian: Arc<SeparatedHamiltonian>,
    pub forcing: Forcing,
}

impl fmt::Debug for ForcedHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForcedHamiltonian").field("hamiltonian", &self.hamiltonian).finish()
    }
}

/// Where the Langevin friction and noise act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoisePlacement {
    /// Friction `c`, noise `sqrt(2/beta) c^{1/2}`, independent of `eps`.
    Slow,
    /// Friction `c/eps`, noise `sqrt(2/beta) c^{1/2} / sqrt(eps)`.
    Fast,
}

/// `dq = M^{-1} p dt`, `dp = -grad H dt - c p dt + sqrt(2/beta) c^{1/2} dW`
/// (friction and noise scaled by `1/eps`, `1/sqrt(eps)` when placed on the fast scale).
#[derive(Debug, Clone)]
pub struct LangevinSystem {
    pub hamiltonian: Arc<SeparatedHamiltonian>,
    pub friction: DMatrix<f64>,
    pub beta: f64,
    pub noise_placement: NoisePlacement,
}

impl LangevinSystem {
    pub fn new(
        hamiltonian: Arc<SeparatedHamiltonian>,
        friction: DMatrix<f64>,
        beta: f64,
        noise_placement: NoisePlacement,
    ) -> Result<Self> {
        let n = hamiltonian.n_dof();
        if friction.nrows() != n || friction.ncols() != n {
            return Err(FlavorError::InvalidInput(format!("friction must be {n}x{n}")));
        }
        if !(beta > 0.0) {
            return Err(FlavorError::InvalidInput("beta must be positive".into()));
        }
        Ok(Self { hamiltonian, friction, beta, noise_placement })
    }

    /// Builds the system from a noise amplitude `sigma` along an isotropic
    /// friction `c`: `dp = ... - c p dt + sigma dW`, so that `1/beta = sigma^2 / (2c)`.
    pub fn from_sigma(
        hamiltonian: Arc<SeparatedHamiltonian>,
        friction: DMatrix<f64>,
        sigma: f64,
        reference_friction: f64,
        noise_placement: NoisePlacement,
    ) -> Result<Self> {
        let beta = 2.0 * reference_friction / (sigma * sigma);
        Self::new(hamiltonian, friction, beta, noise_placement)
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// Scaling exponent `s` relating the microstep to the stiffness: `tau ~ gamma eps^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StiffnessExponent {
    /// ODEs and the nonintrusive Hamiltonian FLAVOR (`tau << eps`).
    One,
    /// Hamiltonian stiffness resolved by the artificial FLAVOR (`tau << sqrt(eps)`).
    Half,
}

impl StiffnessExponent {
    pub fn value(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Half => 0.5,
        }
    }

    /// `eps^s`, the fast time scale.
    pub fn scale(self, epsilon: f64) -> f64 {
        match self {
            Self::One => epsilon,
            Self::Half => epsilon.sqrt(),
        }
    }
}

/// Microstep `tau` and mesostep `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    tau: f64,
    delta: f64,
    gamma: Option<f64>,
}

impl StepSchedule {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && delta.is_finite()) {
            return Err(FlavorError::InvalidSchedule(format!("tau must be positive and finite, got {tau}")));
        }
        if !(tau <= delta) {
            return Err(FlavorError::InvalidSchedule(format!("need tau <= delta, got tau={tau}, delta={delta}")));
        }
        Ok(Self { tau, delta, gamma: None })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// `(tau/eps^s)^2 < delta < tau/eps^s`. Informational only.
    pub fn regime_ok(&self, epsilon: f64, exponent: StiffnessExponent) -> bool {
        let r = self.tau / exponent.scale(epsilon);
        r * r < self.delta && self.delta < r
    }

    /// Speed-up over a fine legacy run at step `tau`: full-system evaluations
    /// per unit time drop from `1/tau` to `2/delta`.
    pub fn nominal_speedup(&self) -> f64 {
        self.delta / (2.0 * self.tau)
    }
}

/// `tau = gamma eps^s`, `delta = gamma^2`.
pub fn make_schedule_rule_of_thumb(epsilon: f64, gamma: f64, exponent: StiffnessExponent) -> Result<StepSchedule> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(FlavorError::InvalidInput(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    check_epsilon(epsilon)?;
    let scale = exponent.scale(epsilon);
    if scale >= gamma {
        return Err(FlavorError::ScheduleInfeasible { scale, gamma, exponent: exponent.value() });
    }
    let mut schedule = StepSchedule::new(gamma * scale, gamma * gamma)?;
    schedule.gamma = Some(gamma);
    Ok(schedule)
}

/// Named map from states to a real vector, used for slow-variable diagnostics.
#[derive(Clone)]
pub struct SlowObservable {
    pub name: String,
    pub map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub lipschitz_hint: Option<f64>,
}

impl fmt::Debug for SlowObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowObservable").field("name", &self.name).finish()
    }
}

impl SlowObservable {
    pub fn new(name: impl Into<String>, map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), map: Arc::new(map), lipschitz_hint: None }
    }

    /// Linear functional `u -> sum_i w_i u_i`.
    pub fn linear(name: impl Into<String>, weights: Vec<f64>) -> Self {
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        Self::new(name, move |u: &[f64]| vec![weights.iter().zip(u).map(|(w, x)| w * x).sum()]).with_lipschitz(norm)
    }

    /// Single state component.
    pub fn component(name: impl Into<String>, index: usize) -> Self {
        let mut obs = Self::new(name, move |u: &[f64]| vec![u[index]]);
        obs.lipschitz_hint = Some(1.0);
        obs
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_hint = Some(l);
        self
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        (self.map)(u)
    }
}

/// Largest finite-difference gradient error of `V` and `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReport {
    pub max_rel_err_v: f64,
    pub max_rel_err_u: f64,
}

impl GradientReport {
    pub fn max(&self) -> f64 {
        self.max_rel_err_v.max(self.max_rel_err_u)
    }
}

/// Compares `grad V`, `grad U` with central differences at `q`.
///
/// The error of each component is measured relative to the largest gradient
/// component, so entries where the gradient vanishes do not blow up the ratio.
pub fn check_gradient(h: &SeparatedHamiltonian, q: &[f64], fd_step: f64) -> GradientReport {
    assert!(fd_step > 0.0 && fd_step < 1e-2, "fd_step must lie in (0, 1e-2)");
    let n = h.n_dof();
    let rel = |pot: &dyn Fn(&[f64]) -> f64, grad: &dyn Fn(&[f64], &mut [f64])| {
        let mut g = vec![0.0; n];
        grad(q, &mut g);
        let mut x = q.to_vec();
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let step = fd_step * q[i].abs().max(1.0);
                x[i] = q[i] + step;
                let fp = pot(&x);
                x[i] = q[i] - step;
                let fm = pot(&x);
                x[i] = q[i];
                (fp - fm) / (2.0 * step)
            })
            .collect();
        let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = g.iter().zip(&fd).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if err == 0.0 {
            0.0
        } else {
            err / scale.max(f64::MIN_POSITIVE)
        }
    };
    GradientReport {
        max_rel_err_v: rel(&|x| h.soft_potential(x), &|x, o| h.soft_gradient(x, o)),
        max_rel_err_u: rel(&|x| h.stiff_potential(x), &|x, o| h.stiff_gradient(x, o)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(n: usize) -> SeparatedHamiltonian {
        SeparatedHamiltonian::new(
            MassMatrix::identity(n),
            Arc::new(|q: &[f64]| 0.5 * q.iter().map(|x| x * x).sum::<f64>()),
            Arc::new(|q: &[f64], out: &mut [f64]| out.copy_from_slice(q)),
            Arc::new(|_q: &[f64]| 0.0),
            Arc::new(|_q: &[f64], out: &mut [f64]| out.fill(0.0)),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn rule_of_thumb_examples() {
        let s = make_schedule_rule_of_thumb(1e-6, 0.1, StiffnessExponent::One).unwrap();
        assert!((s.tau() - 1e-7).abs() < 1e-20);
        assert!((s.delta() - 1e-2).abs() < 1e-15);
        let s = make_schedule_rule_of_thumb(1e-6, 0.1, StiffnessExponent::Half).unwrap();
        assert!((s.tau() - 1e-4).abs() < 1e-17);
        assert!((s.delta() - 1e-2).abs() < 1e-15);
        assert!(matches!(
            make_schedule_rule_of_thumb(0.5, 0.1, StiffnessExponent::One),
            Err(FlavorError::ScheduleInfeasible { .. })
        ));
    }

    #[test]
    fn schedule_rejects_tau_above_delta() {
        assert!(StepSchedule::new(0.2, 0.1).is_err());
        assert!(StepSchedule::new(0.0, 0.1).is_err());
        assert!(StepSchedule::new(0.1, 0.1).is_ok());
    }

    #[test]
    fn regime_predicate() {
        let s = StepSchedule::new(1e-5, 1e-3).unwrap();
        // tau/eps = 10: 100 < delta fails
        assert!(!s.regime_ok(1e-6, StiffnessExponent::One));
        // tau/sqrt(eps) = 0.01: 1e-4 < 1e-3 < 1e-2
        assert!(s.regime_ok(1e-6, StiffnessExponent::Half));
    }

    #[test]
    fn gradient_check_quadratic_and_quartic() {
        let h = quadratic(2);
        let r = check_gradient(&h, &[1.0, 2.0], 1e-4);
        assert!(r.max_rel_err_v <= 1e-8, "{r:?}");
        assert_eq!(r.max_rel_err_u, 0.0);

        let quartic = SeparatedHamiltonian::new(
            MassMatrix::identity(1),
            Arc::new(|q: &[f64]| q[0].powi(4)),
            Arc::new(|q: &[f64], out: &mut [f64]| out[0] = 4.0 * q[0].powi(3)),
            Arc::new(|_q: &[f64]| 0.0),
            Arc::new(|_q: &[f64], out: &mut [f64]| out[0] = 0.0),
            1.0,
        )
        .unwrap();
        let mut g = [0.0];
        quartic.soft_gradient(&[0.8], &mut g);
        assert!((g[0] - 2.048).abs() < 1e-12);
        assert!(check_gradient(&quartic, &[0.8], 1e-4).max_rel_err_v <= 1e-6);
    }

    #[test]
    fn gradient_check_detects_wrong_gradient() {
        let bad = SeparatedHamiltonian::new(
            MassMatrix::identity(1),
            Arc::new(|q: &[f64]| q[0].powi(3)),
            Arc::new(|q: &[f64], out: &mut [f64]| out[0] = 2.0 * q[0] * q[0]),
            Arc::new(|_q: &[f64]| 0.0),
            Arc::new(|_q: &[f64], out: &mut [f64]| out[0] = 0.0),
            1.0,
        )
        .unwrap();
        assert!(check_gradient(&bad, &[1.0], 1e-4).max_rel_err_v > 0.1);
    }

    #[test]
    fn dense_mass_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mm = MassMatrix::dense(m.clone()).unwrap();
        let mut v = [0.0; 2];
        mm.apply_inverse(&[1.0, 2.0], &mut v);
        let back = &m * DVector::from_column_slice(&v);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
        assert!(MassMatrix::dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(MassMatrix::dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
    }

    #[test]
    fn energy_and_split_drift() {
        let h = quadratic(1);
        assert!((h.energy(&[1.0], &[2.0]) - 2.5).abs() < 1e-15);
        let sys = StiffSplitSystem::new(
            1,
            Arc::new(|u: &[f64], o: &mut [f64]| o[0] = -u[0]),
            Arc::new(|u: &[f64], o: &mut [f64]| o[0] = 2.0 * u[0]),
            0.1,
        )
        .unwrap();
        let mut o = [0.0];
        sys.drift(&[1.0], 3.0, 0.0, &mut o);
        assert_eq!(o[0], 5.0);
        sys.drift(&[1.0], 0.0, 0.0, &mut o);
        assert_eq!(o[0], -1.0);
        assert!(StiffSplitSystem::new(0, sys.soft.clone(), sys.stiff.clone(), 0.1).is_err());
        assert!(StiffSplitSystem::new(1, sys.soft.clone(), sys.stiff.clone(), 0.0).is_err());
    }

    #[test]
    fn sigma_to_beta() {
        let h = Arc::new(quadratic(1));
        let ls =
            LangevinSystem::from_sigma(h, DMatrix::from_element(1, 1, 0.1), 0.5, 0.1, NoisePlacement::Slow).unwrap();
        assert!((ls.temperature() - 1.25).abs() < 1e-14);
    }
}
