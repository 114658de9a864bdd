use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_len, ensure_finite, scratch, OneStepMap, StochasticOneStepMap, SymplecticEuler};
use crate::error::{FlavorError, Result};
use crate::noise::{fill_standard_normal, NoiseRng};
use crate::system::{LangevinSystem, NoisePlacement, SdeModel};

/// `u' = u + h drift(u, alpha, t) + sqrt(h) B(u, alpha, t) xi`, `xi ~ N(0, I)`.
///
/// Draws exactly `dim` normals per nonzero step.
#[derive(Clone)]
pub struct EulerMaruyama {
    model: Arc<dyn SdeModel>,
}

impl EulerMaruyama {
    pub fn new(model: Arc<dyn SdeModel>) -> Self {
        Self { model }
    }
}

impl std::fmt::Debug for EulerMaruyama {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EulerMaruyama").field("dim", &self.model.dim()).finish()
    }
}

impl StochasticOneStepMap for EulerMaruyama {
    fn name(&self) -> &'static str {
        "euler-maruyama"
    }
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn noise_dim(&self) -> usize {
        self.model.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64, rng: &mut NoiseRng) -> Result<()> {
        let d = self.dim();
        check_len(u, d)?;
        if h == 0.0 {
            return Ok(());
        }
        let mut f = scratch(d);
        let mut b = scratch(d * d);
        let mut xi = scratch(d);
        self.model.drift(u, alpha, t, &mut f);
        self.model.diffusion(u, alpha, t, &mut b);
        fill_standard_normal(rng, &mut xi);
        let sh = h.sqrt();
        for i in 0..d {
            let noise: f64 = (0..d).map(|j| b[i * d + j] * xi[j]).sum();
            u[i] += h * f[i] + sh * noise;
        }
        ensure_finite(u)
    }
}

#[derive(Debug, Clone)]
enum OuForm {
    /// Componentwise rates and stationary variances.
    Diagonal { rates: Vec<f64>, variance: Vec<f64> },
    /// `Gamma = Q diag(lambda) Q^T`, isotropic stationary variance.
    Eigen { basis: DMatrix<f64>, rates: Vec<f64>, variance: f64 },
}

/// Exact flow of `dp = -alpha Gamma p dt + sqrt(alpha) sqrt(2 s) Gamma^{1/2} dW` on the
/// momentum half of a `[q, p]` state, `s` the stationary variance:
/// `p' = e^{-alpha Gamma h} p + N(0, s (I - e^{-2 alpha Gamma h}))`.
///
/// A diagonal `Gamma` takes a componentwise path; any other symmetric
/// positive-semidefinite `Gamma` is eigendecomposed once at construction.
/// Draws exactly `n_dof` normals per nonzero step.
#[derive(Debug, Clone)]
pub struct OuExactFlow {
    n_dof: usize,
    form: OuForm,
}

impl OuExactFlow {
    pub fn new(friction: &DMatrix<f64>, stationary_var: f64) -> Result<Self> {
        let n = friction.nrows();
        if !friction.is_square() || n == 0 {
            return Err(FlavorError::InvalidInput("friction must be a non-empty square matrix".into()));
        }
        if !(stationary_var >= 0.0 && stationary_var.is_finite()) {
            return Err(FlavorError::InvalidInput("stationary variance must be non-negative".into()));
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || friction[(i, j)] == 0.0));
        if diagonal {
            let rates: Vec<f64> = (0..n).map(|i| friction[(i, i)]).collect();
            return Self::diagonal(rates, vec![stationary_var; n]);
        }
        let scale = friction.amax();
        if (friction - friction.transpose()).amax() > 1e-12 * scale {
            return Err(FlavorError::DecompositionFailure("friction matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(friction.clone());
        if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(FlavorError::DecompositionFailure("friction matrix is not positive semidefinite".into()));
        }
        let rates = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        Ok(Self { n_dof: n, form: OuForm::Eigen { basis: eig.eigenvectors, rates, variance: stationary_var } })
    }

    pub fn diagonal(rates: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if rates.len() != variance.len() || rates.is_empty() {
            return Err(FlavorError::InvalidInput("rates and variances must have equal, nonzero length".into()));
        }
        if rates.iter().chain(&variance).any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(FlavorError::InvalidInput("rates and variances must be non-negative".into()));
        }
        Ok(Self { n_dof: rates.len(), form: OuForm::Diagonal { rates, variance } })
    }

    /// OU part of a Langevin system, stationary variance `1/beta`.
    pub fn for_langevin(ls: &LangevinSystem) -> Result<Self> {
        Self::new(&ls.friction, ls.temperature())
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Mean propagator `e^{-alpha Gamma h}`.
    pub fn mean_factor(&self, h: f64, alpha: f64) -> DMatrix<f64> {
        match &self.form {
            OuForm::Diagonal { rates, .. } => DMatrix::from_diagonal(&DVector::from_iterator(
                self.n_dof,
                rates.iter().map(|r| (-alpha * r * h).exp()),
            )),
            OuForm::Eigen { basis, rates, .. } => {
                let d = DVector::from_iterator(self.n_dof, rates.iter().map(|r| (-alpha * r * h).exp()));
                basis * DMatrix::from_diagonal(&d) * basis.transpose()
            }
        }
    }

    /// Covariance of the added noise after a step of length `h`.
    pub fn covariance(&self, h: f64, alpha: f64) -> DMatrix<f64> {
        match &self.form {
            OuForm::Diagonal { rates, variance } => DMatrix::from_diagonal(&DVector::from_iterator(
                self.n_dof,
                rates.iter().zip(variance).map(|(r, v)| -v * (-2.0 * alpha * r * h).exp_m1()),
            )),
            OuForm::Eigen { basis, rates, variance } => {
                let d = DVector::from_iterator(
                    self.n_dof,
                    rates.iter().map(|r| -variance * (-2.0 * alpha * r * h).exp_m1()),
                );
                basis * DMatrix::from_diagonal(&d) * basis.transpose()
            }
        }
    }

    /// Acts on a bare momentum vector.
    pub fn step_momenta(&self, p: &mut [f64], h: f64, alpha: f64, rng: &mut NoiseRng) {
        if h == 0.0 {
            return;
        }
        let mut xi = scratch(self.n_dof);
        fill_standard_normal(rng, &mut xi);
        match &self.form {
            OuForm::Diagonal { rates, variance } => {
                for i in 0..self.n_dof {
                    let x = -alpha * rates[i] * h;
                    p[i] = x.exp() * p[i] + (-variance[i] * (2.0 * x).exp_m1()).sqrt() * xi[i];
                }
            }
            OuForm::Eigen { basis, rates, variance } => {
                let n = self.n_dof;
                let mut y = scratch(n);
                for k in 0..n {
                    let x = -alpha * rates[k] * h;
                    let proj: f64 = (0..n).map(|i| basis[(i, k)] * p[i]).sum();
                    y[k] = x.exp() * proj + (-variance * (2.0 * x).exp_m1()).sqrt() * xi[k];
                }
                for (i, pi) in p.iter_mut().enumerate().take(n) {
                    *pi = (0..n).map(|k| basis[(i, k)] * y[k]).sum();
                }
            }
        }
    }
}

impl StochasticOneStepMap for OuExactFlow {
    fn name(&self) -> &'static str {
        "ou-exact"
    }
    fn dim(&self) -> usize {
        2 * self.n_dof
    }
    fn noise_dim(&self) -> usize {
        self.n_dof
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, _t: f64, rng: &mut NoiseRng) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        self.step_momenta(&mut u[self.n_dof..], h, alpha, rng);
        ensure_finite(u)
    }
}

/// Geometric Langevin algorithm: exact OU substep, then symplectic Euler.
///
/// With slow noise the OU part runs at unit rate; with fast noise it is
/// switched together with the stiff force, so it runs at rate `alpha`.
#[derive(Debug, Clone)]
pub struct Gla {
    ou: OuExactFlow,
    ve: SymplecticEuler,
    placement: NoisePlacement,
}

impl Gla {
    pub fn new(ls: &LangevinSystem) -> Result<Self> {
        Ok(Self {
            ou: OuExactFlow::for_langevin(ls)?,
            ve: SymplecticEuler::new(ls.hamiltonian.clone()),
            placement: ls.noise_placement,
        })
    }
}

impl StochasticOneStepMap for Gla {
    fn name(&self) -> &'static str {
        "gla"
    }
    fn dim(&self) -> usize {
        self.ve.dim()
    }
    fn noise_dim(&self) -> usize {
        self.ou.n_dof()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64, rng: &mut NoiseRng) -> Result<()> {
        if h == 0.0 {
            return check_len(u, self.dim());
        }
        let ou_alpha = match self.placement {
            NoisePlacement::Slow => 1.0,
            NoisePlacement::Fast => alpha,
        };
        self.ou.step(u, h, ou_alpha, t, rng)?;
        self.ve.step(u, h, alpha, t)
    }
}
