//! Symplectic maps for separated Hamiltonians `1/2 p^T M^{-1} p + V + alpha U`.

use std::sync::Arc;

use super::{check_len, ensure_finite, scratch, OneStepMap};
use crate::error::{FlavorError, Result};
use crate::system::{ExactFastFlow, ForcedHamiltonian, MassMatrix, SeparatedHamiltonian};

#[inline]
fn kick(ham: &SeparatedHamiltonian, q: &[f64], p: &mut [f64], h: f64, alpha: f64) {
    let mut f = scratch(q.len());
    ham.force_gradient(q, alpha, &mut f);
    for (pi, fi) in p.iter_mut().zip(f.iter()) {
        *pi -= h * fi;
    }
}

#[inline]
fn drift(mass: &MassMatrix, q: &mut [f64], p: &[f64], h: f64) {
    let mut v = scratch(q.len());
    mass.apply_inverse(p, &mut v);
    for (qi, vi) in q.iter_mut().zip(v.iter()) {
        *qi += h * vi;
    }
}

/// Momentum-first symplectic (variational) Euler:
/// `p' = p - h (grad V + alpha grad U)(q)`, `q' = q + h M^{-1} p'`.
#[derive(Debug, Clone)]
pub struct SymplecticEuler {
    ham: Arc<SeparatedHamiltonian>,
}

impl SymplecticEuler {
    pub fn new(ham: Arc<SeparatedHamiltonian>) -> Self {
        Self { ham }
    }
}

impl OneStepMap for SymplecticEuler {
    fn name(&self) -> &'static str {
        "symplectic-euler"
    }
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let (q, p) = u.split_at_mut(self.ham.n_dof());
        kick(&self.ham, q, p, h, alpha);
        drift(self.ham.mass(), q, p, h);
        ensure_finite(u)
    }
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        Some(Arc::new(SymplecticEulerAdjoint::new(self.ham.clone())))
    }
}

/// Position-first symplectic Euler, the adjoint of [`SymplecticEuler`]:
/// `q' = q + h M^{-1} p`, `p' = p - h (grad V + alpha grad U)(q')`.
#[derive(Debug, Clone)]
pub struct SymplecticEulerAdjoint {
    ham: Arc<SeparatedHamiltonian>,
}

impl SymplecticEulerAdjoint {
    pub fn new(ham: Arc<SeparatedHamiltonian>) -> Self {
        Self { ham }
    }
}

impl OneStepMap for SymplecticEulerAdjoint {
    fn name(&self) -> &'static str {
        "symplectic-euler-adjoint"
    }
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let (q, p) = u.split_at_mut(self.ham.n_dof());
        drift(self.ham.mass(), q, p, h);
        kick(&self.ham, q, p, h, alpha);
        ensure_finite(u)
    }
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        Some(Arc::new(SymplecticEuler::new(self.ham.clone())))
    }
}

/// Kick-drift-kick Störmer/Verlet.
#[derive(Debug, Clone)]
pub struct VelocityVerlet {
    ham: Arc<SeparatedHamiltonian>,
}

impl VelocityVerlet {
    pub fn new(ham: Arc<SeparatedHamiltonian>) -> Self {
        Self { ham }
    }
}

impl OneStepMap for VelocityVerlet {
    fn name(&self) -> &'static str {
        "velocity-verlet"
    }
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let (q, p) = u.split_at_mut(self.ham.n_dof());
        kick(&self.ham, q, p, 0.5 * h, alpha);
        drift(self.ham.mass(), q, p, h);
        kick(&self.ham, q, p, 0.5 * h, alpha);
        ensure_finite(u)
    }
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        Some(Arc::new(self.clone()))
    }
}

/// `p' = p - h grad V(q)`; ignores `alpha`.
#[derive(Debug, Clone)]
pub struct SoftKick {
    ham: Arc<SeparatedHamiltonian>,
}

impl SoftKick {
    pub fn new(ham: Arc<SeparatedHamiltonian>) -> Self {
        Self { ham }
    }
}

impl OneStepMap for SoftKick {
    fn name(&self) -> &'static str {
        "soft-kick"
    }
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, _alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let (q, p) = u.split_at_mut(self.ham.n_dof());
        kick(&self.ham, q, p, h, 0.0);
        ensure_finite(u)
    }
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        Some(Arc::new(self.clone()))
    }
}

/// Symplectic Euler with an extra fast force `alpha f(t, q)` evaluated at the
/// start of the step, as in a discrete d'Alembert principle.
#[derive(Debug, Clone)]
pub struct ForcedSymplecticEuler {
    sys: Arc<ForcedHamiltonian>,
}

impl ForcedSymplecticEuler {
    pub fn new(sys: Arc<ForcedHamiltonian>) -> Self {
        Self { sys }
    }
}

impl OneStepMap for ForcedSymplecticEuler {
    fn name(&self) -> &'static str {
        "forced-symplectic-euler"
    }
    fn dim(&self) -> usize {
        self.sys.hamiltonian.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let ham = &self.sys.hamiltonian;
        let n = ham.n_dof();
        let (q, p) = u.split_at_mut(n);
        let mut g = scratch(n);
        ham.force_gradient(q, alpha, &mut g);
        if alpha != 0.0 {
            let mut f = scratch(n);
            (self.sys.forcing)(t, q, &mut f);
            for (gi, fi) in g.iter_mut().zip(f.iter()) {
                *gi -= alpha * fi;
            }
        }
        for (pi, gi) in p.iter_mut().zip(g.iter()) {
            *pi -= h * gi;
        }
        drift(ham.mass(), q, p, h);
        ensure_finite(u)
    }
}

/// How the impulse method advances the stiff subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastFlowKind {
    /// Closed-form flow registered on the Hamiltonian.
    Exact,
    /// `substeps` velocity-Verlet steps on `1/2 p^T M^{-1} p + alpha U`.
    Numeric { substeps: usize },
}

/// Kick with the soft force for `h/2`, evolve the stiff subsystem for `h`,
/// kick again for `h/2`.
#[derive(Clone)]
pub struct ImpulseMethod {
    ham: Arc<SeparatedHamiltonian>,
    stiff: Arc<SeparatedHamiltonian>,
    kind: FastFlowKind,
    exact: Option<Arc<dyn ExactFastFlow>>,
}

impl std::fmt::Debug for ImpulseMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImpulseMethod").field("kind", &self.kind).finish()
    }
}

impl ImpulseMethod {
    pub fn new(ham: Arc<SeparatedHamiltonian>, kind: FastFlowKind) -> Result<Self> {
        let exact = match kind {
            FastFlowKind::Exact => Some(ham.exact_fast_flow().cloned().ok_or(FlavorError::NoExactFastFlow)?),
            FastFlowKind::Numeric { substeps } if substeps == 0 => {
                return Err(FlavorError::InvalidInput("numeric fast flow needs at least one substep".into()))
            }
            FastFlowKind::Numeric { .. } => None,
        };
        let stiff = Arc::new(ham.stiff_part());
        Ok(Self { ham, stiff, kind, exact })
    }
}

impl OneStepMap for ImpulseMethod {
    fn name(&self) -> &'static str {
        "impulse"
    }
    fn dim(&self) -> usize {
        self.ham.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let n = self.ham.n_dof();
        {
            let (q, p) = u.split_at_mut(n);
            kick(&self.ham, q, p, 0.5 * h, 0.0);
        }
        match (&self.exact, self.kind) {
            (Some(flow), _) => flow.flow(u, h, alpha),
            (None, FastFlowKind::Numeric { substeps }) => {
                let hs = h / substeps as f64;
                for _ in 0..substeps {
                    let (q, p) = u.split_at_mut(n);
                    kick(&self.stiff, q, p, 0.5 * hs, alpha);
                    drift(self.stiff.mass(), q, p, hs);
                    kick(&self.stiff, q, p, 0.5 * hs, alpha);
                }
            }
            (None, FastFlowKind::Exact) => return Err(FlavorError::NoExactFastFlow),
        }
        let (q, p) = u.split_at_mut(n);
        kick(&self.ham, q, p, 0.5 * h, 0.0);
        ensure_finite(u)
    }
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        Some(Arc::new(self.clone()))
    }
}

/// Exact flow of free particles joined pairwise by harmonic springs
/// `alpha * (k/2) (q_b - q_a)^2`, with diagonal masses.
///
/// Each pair splits into a freely drifting centre of mass and a relative
/// coordinate rotating at `sqrt(alpha k / mu)`, `mu` the reduced mass.
/// Coordinates outside every pair drift freely.
#[derive(Debug, Clone)]
pub struct HarmonicPairFlow {
    n_dof: usize,
    pairs: Vec<(usize, usize, f64)>,
    masses: Vec<f64>,
    paired: Vec<bool>,
}

impl HarmonicPairFlow {
    pub fn new(masses: Vec<f64>, pairs: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n_dof = masses.len();
        let mut paired = vec![false; n_dof];
        for &(a, b, k) in &pairs {
            if a >= n_dof || b >= n_dof || a == b {
                return Err(FlavorError::InvalidInput(format!("bad spring pair ({a}, {b})")));
            }
            if paired[a] || paired[b] {
                return Err(FlavorError::InvalidInput("spring pairs must be disjoint".into()));
            }
            if !(k >= 0.0) {
                return Err(FlavorError::InvalidInput("spring constants must be non-negative".into()));
            }
            paired[a] = true;
            paired[b] = true;
        }
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(FlavorError::InvalidInput("masses must be positive".into()));
        }
        Ok(Self { n_dof, pairs, masses, paired })
    }
}

impl ExactFastFlow for HarmonicPairFlow {
    fn flow(&self, u: &mut [f64], h: f64, alpha: f64) {
        let n = self.n_dof;
        let (q, p) = u.split_at_mut(n);
        for i in 0..n {
            if !self.paired[i] {
                q[i] += h * p[i] / self.masses[i];
            }
        }
        for &(a, b, k) in &self.pairs {
            let (ma, mb) = (self.masses[a], self.masses[b]);
            let mt = ma + mb;
            let mu = ma * mb / mt;
            let com = (ma * q[a] + mb * q[b]) / mt;
            let vcom = (p[a] + p[b]) / mt;
            let r = q[b] - q[a];
            let pr = (ma * p[b] - mb * p[a]) / mt;
            let w = (alpha * k / mu).sqrt();
            let (s, c) = (w * h).sin_cos();
            // sin(wh)/w -> h as w -> 0
            let sinc = if w == 0.0 { h } else { s / w };
            let r1 = r * c + pr / mu * sinc;
            let pr1 = -mu * w * w * r * sinc + pr * c;
            let com1 = com + vcom * h;
            q[a] = com1 - mb / mt * r1;
            q[b] = com1 + ma / mt * r1;
            p[a] = ma * vcom - pr1;
            p[b] = mb * vcom + pr1;
        }
    }
}
