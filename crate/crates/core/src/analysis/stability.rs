use nalgebra::{Complex, DMatrix, DVector, Schur};
use rayon::prelude::*;

use crate::error::{FlavorError, Result};
use crate::flavor::FlavorStepper;
use crate::problems::{linear_stability_problem, Method};
use crate::system::StepSchedule;

/// Default tolerance on `|lambda| <= 1`.
pub const STABILITY_TOL: f64 = 1e-8;

/// One-mesostep matrix of a stepper over a linear system, built from the
/// images of the unit basis vectors.
///
/// Linearity is probed first: the stepper must fix the origin and be
/// additive on two generic states to `1e-10` relative accuracy.
pub fn transfer_matrix(stepper: &FlavorStepper) -> Result<DMatrix<f64>> {
    if stepper.is_stochastic() {
        return Err(FlavorError::NotLinear);
    }
    let n = stepper.dim();
    let step = |u: &[f64]| stepper.apply(u, 0, 0);
    let zero = step(&vec![0.0; n])?;
    if zero.iter().any(|z| z.abs() > 1e-12) {
        return Err(FlavorError::NotLinear);
    }
    let mut t = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = step(&e)?;
        e[j] = 0.0;
        t.set_column(j, &DVector::from_column_slice(&col));
    }
    let a: Vec<f64> = (0..n).map(|i| 0.3 + 0.7 * ((i * 7 + 3) % 11) as f64 / 11.0).collect();
    let b: Vec<f64> = (0..n).map(|i| -0.5 + ((i * 5 + 1) % 13) as f64 / 13.0).collect();
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let (ta, tb, ts) = (step(&a)?, step(&b)?, step(&sum)?);
    let scale = ta.iter().chain(&tb).fold(1.0_f64, |m, x| m.max(x.abs()));
    let defect = ts.iter().zip(ta.iter().zip(&tb)).map(|(s, (x, y))| (s - x - y).abs()).fold(0.0, f64::max);
    if defect > 1e-10 * scale {
        return Err(FlavorError::NotLinear);
    }
    Ok(t)
}

/// Monic characteristic polynomial `det(lambda I - T)`, coefficients from
/// the leading one down to the constant term (Faddeev–LeVerrier).
pub fn characteristic_polynomial(t: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !t.is_square() {
        return Err(FlavorError::InvalidInput("characteristic polynomial needs a square matrix".into()));
    }
    let n = t.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let am = t * &m;
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        m = am + DMatrix::identity(n, n) * c;
    }
    Ok(coeffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub spectral_radius: f64,
    pub stable: bool,
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Stability with the default tolerance.
pub fn stability_verdict(t: &DMatrix<f64>) -> Result<StabilityVerdict> {
    stability_verdict_with_tol(t, STABILITY_TOL)
}

/// Stable iff every eigenvalue has modulus at most `1 + tol`. Repeated
/// unit-modulus eigenvalues count as stable.
pub fn stability_verdict_with_tol(t: &DMatrix<f64>, tol: f64) -> Result<StabilityVerdict> {
    if !t.is_square() || t.nrows() == 0 {
        return Err(FlavorError::InvalidInput("stability needs a non-empty square matrix".into()));
    }
    if t.iter().any(|x| !x.is_finite()) {
        return Err(FlavorError::EigenFailure);
    }
    let schur = Schur::try_new(t.clone(), f64::EPSILON, 100_000).ok_or(FlavorError::EigenFailure)?;
    let eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    let spectral_radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    Ok(StabilityVerdict { spectral_radius, stable: spectral_radius <= 1.0 + tol, eigenvalues })
}

/// One cell of a stability scan. `stable` is `None` where `tau > delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCell {
    pub delta: f64,
    pub tau_ratio: f64,
    pub tau: f64,
    pub spectral_radius: f64,
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub method: Method,
    pub omega: f64,
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    pub tau_ratios: Vec<f64>,
    /// Row-major: one row per `tau_ratio`, one column per `delta`.
    pub cells: Vec<StabilityCell>,
}

impl StabilityGrid {
    pub fn cell(&self, ratio_index: usize, delta_index: usize) -> &StabilityCell {
        &self.cells[ratio_index * self.deltas.len() + delta_index]
    }
}

/// Verdicts over a `(delta, tau/eps)` grid for `method` on the linear
/// oscillator pair with stiffness `omega` (`eps = 1/omega^2`, or `1` at `omega = 0`).
pub fn stability_domain_scan(method: Method, omega: f64, deltas: &[f64], tau_ratios: &[f64]) -> Result<StabilityGrid> {
    stability_domain_scan_with_tol(method, omega, deltas, tau_ratios, STABILITY_TOL)
}

pub fn stability_domain_scan_with_tol(
    method: Method,
    omega: f64,
    deltas: &[f64],
    tau_ratios: &[f64],
    tol: f64,
) -> Result<StabilityGrid> {
    if deltas.iter().chain(tau_ratios).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(FlavorError::InvalidInput("scan grid values must be positive and finite".into()));
    }
    let bench = linear_stability_problem(omega)?;
    let eps = bench.epsilon();
    let jobs: Vec<(f64, f64)> = tau_ratios.iter().flat_map(|&r| deltas.iter().map(move |&d| (r, d))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(ratio, delta)| {
            let tau = ratio * eps;
            if tau > delta {
                return Ok(StabilityCell { delta, tau_ratio: ratio, tau, spectral_radius: f64::NAN, stable: None });
            }
            let stepper = bench.stepper(method, StepSchedule::new(tau, delta)?)?;
            let v = stability_verdict_with_tol(&transfer_matrix(&stepper)?, tol)?;
            Ok(StabilityCell {
                delta,
                tau_ratio: ratio,
                tau,
                spectral_radius: v.spectral_radius,
                stable: Some(v.stable),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityGrid { method, omega, epsilon: eps, deltas: deltas.to_vec(), tau_ratios: tau_ratios.to_vec(), cells })
}
