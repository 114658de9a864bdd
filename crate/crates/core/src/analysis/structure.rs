use nalgebra::DMatrix;

use crate::error::{FlavorError, Result};
use crate::flavor::FlavorStepper;

/// Central-difference Jacobian of `f` at `u` with per-coordinate step
/// `h * max(|u_i|, 1)`.
pub fn fd_jacobian<F>(f: F, u: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) {
        return Err(FlavorError::InvalidInput("finite-difference step must be positive".into()));
    }
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = u.to_vec();
    for j in 0..n {
        let dh = h * u[j].abs().max(1.0);
        probe[j] = u[j] + dh;
        let plus = f(&probe)?;
        probe[j] = u[j] - dh;
        let minus = f(&probe)?;
        probe[j] = u[j];
        if plus.len() != n || minus.len() != n {
            return Err(FlavorError::LayoutMismatch("map changes the state dimension".into()));
        }
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * dh);
        }
    }
    Ok(jac)
}

/// Canonical symplectic form on `[q, p]` with `n_dof` positions.
pub fn symplectic_form(n_dof: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_dof, 2 * n_dof);
    for i in 0..n_dof {
        omega[(i, n_dof + i)] = 1.0;
        omega[(n_dof + i, i)] = -1.0;
    }
    omega
}

/// `max |J^T Omega J - lambda Omega|`; `lambda = 1` tests symplecticity.
pub fn conformal_defect(jac: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let n = jac.nrows();
    if n != jac.ncols() || n % 2 != 0 {
        return Err(FlavorError::LayoutMismatch("Jacobian must be square with even dimension".into()));
    }
    let omega = symplectic_form(n / 2);
    let d = jac.transpose() * &omega * jac - omega * lambda;
    Ok(d.amax())
}

pub fn symplectic_defect(jac: &DMatrix<f64>) -> Result<f64> {
    conformal_defect(jac, 1.0)
}

/// Jacobian of one mesostep at `u`, with the noise of mesostep `k` of
/// trajectory `seed` held fixed.
pub fn mesostep_jacobian(stepper: &FlavorStepper, u: &[f64], k: u64, seed: u64, h: f64) -> Result<DMatrix<f64>> {
    fd_jacobian(|v| stepper.apply(v, k, seed), u, h)
}

fn flip_momenta(u: &mut [f64]) {
    let n = u.len() / 2;
    for p in &mut u[n..] {
        *p = -*p;
    }
}

/// `max |rho Theta rho Theta (u) - u|` with `rho` the momentum flip.
pub fn reversibility_defect(stepper: &FlavorStepper, u: &[f64]) -> Result<f64> {
    let mut v = stepper.apply(u, 0, 0)?;
    flip_momenta(&mut v);
    let mut w = stepper.apply(&v, 0, 0)?;
    flip_momenta(&mut w);
    Ok(w.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
