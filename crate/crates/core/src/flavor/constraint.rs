//! Constrained free flight for the artificial FLAVOR: fast directions are
//! frozen during the off phase while everything else drifts freely.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{FlavorError, Result};
use crate::legacy::{check_len, ensure_finite, OneStepMap};
use crate::system::SeparatedHamiltonian;

/// User-supplied constrained flight `u -> flight_h(u)` on a `[q, p]` state.
pub trait ConstrainedFlight: Send + Sync {
    fn flight(&self, u: &mut [f64], h: f64);
}

/// Which directions to freeze during the off phase.
#[derive(Clone)]
pub enum ConstraintSpec {
    /// Rows of `A` are frozen velocity directions: the flight keeps `A q` fixed.
    LinearFreeze(DMatrix<f64>),
    /// Arbitrary flight map. Symplecticity is the caller's responsibility.
    Custom(Arc<dyn ConstrainedFlight>),
}

impl std::fmt::Debug for ConstraintSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::LinearFreeze(a) => f.debug_tuple("LinearFreeze").field(&a.shape()).finish(),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl ConstraintSpec {
    /// No frozen directions: plain free flight.
    pub fn none(n_dof: usize) -> Self {
        Self::LinearFreeze(DMatrix::zeros(0, n_dof))
    }
}

/// Free flight along the constraint-tangent space with mass-weighted
/// projection: `q += h P M^{-1} p` with `P = I - M^{-1} A^T (A M^{-1} A^T)^{-1} A`.
/// Momenta are left as they were, which stores and restores the frozen
/// component.
#[derive(Debug, Clone)]
pub struct LinearFlight {
    n_dof: usize,
    /// `P M^{-1}`
    drift: DMatrix<f64>,
}

impl LinearFlight {
    pub fn new(ham: &SeparatedHamiltonian, a: &DMatrix<f64>) -> Result<Self> {
        let n = ham.n_dof();
        if a.ncols() != n {
            return Err(FlavorError::LayoutMismatch(format!(
                "constraint matrix has {} columns, expected {n}",
                a.ncols()
            )));
        }
        let minv = ham.mass().inverse_dense();
        if a.nrows() == 0 {
            return Ok(Self { n_dof: n, drift: minv });
        }
        let gram = a * &minv * a.transpose();
        // rank test on the Gram matrix, relative to its size
        let sv = gram.singular_values();
        let smax = sv.max();
        if !(smax > 0.0) || sv.min() <= 1e-12 * smax {
            return Err(FlavorError::ConstraintRankDeficient);
        }
        let gram_inv = gram.cholesky().ok_or(FlavorError::ConstraintRankDeficient)?.inverse();
        let proj = DMatrix::identity(n, n) - &minv * a.transpose() * gram_inv * a;
        Ok(Self { n_dof: n, drift: proj * minv })
    }

    pub fn drift_matrix(&self) -> &DMatrix<f64> {
        &self.drift
    }
}

impl ConstrainedFlight for LinearFlight {
    fn flight(&self, u: &mut [f64], h: f64) {
        let n = self.n_dof;
        let (q, p) = u.split_at_mut(n);
        for i in 0..n {
            let v: f64 = (0..n).map(|j| self.drift[(i, j)] * p[j]).sum();
            q[i] += h * v;
        }
    }
}

/// Wraps a flight as a one-step map (ignores `alpha` and `t`).
pub(crate) struct FlightMap {
    pub(crate) dim: usize,
    pub(crate) flight: Arc<dyn ConstrainedFlight>,
}

impl OneStepMap for FlightMap {
    fn name(&self) -> &'static str {
        "constrained-flight"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn step(&self, u: &mut [f64], h: f64, _alpha: f64, _t: f64) -> Result<()> {
        check_len(u, self.dim)?;
        if h == 0.0 {
            return Ok(());
        }
        self.flight.flight(u, h);
        ensure_finite(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::MassMatrix;

    fn free(masses: Vec<f64>) -> SeparatedHamiltonian {
        let n = masses.len();
        SeparatedHamiltonian::new(
            MassMatrix::diagonal(masses).unwrap(),
            Arc::new(|_q: &[f64]| 0.0),
            Arc::new(move |_q: &[f64], o: &mut [f64]| o[..n].fill(0.0)),
            Arc::new(|_q: &[f64]| 0.0),
            Arc::new(move |_q: &[f64], o: &mut [f64]| o[..n].fill(0.0)),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn frozen_relative_coordinate_keeps_centre_of_mass_velocity() {
        let ham = free(vec![1.0, 3.0]);
        let a = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
        let fl = LinearFlight::new(&ham, &a).unwrap();
        let mut u = [0.0, 1.0, 2.0, 3.0];
        fl.flight(&mut u, 0.5);
        // relative distance is preserved, centre of mass moves with (p1+p2)/(m1+m2)
        assert!((u[1] - u[0] - 1.0).abs() < 1e-15);
        let vcom = 5.0 / 4.0;
        let com = (u[0] + 3.0 * u[1]) / 4.0;
        assert!((com - (0.0 + 3.0) / 4.0 - 0.5 * vcom).abs() < 1e-15);
        assert_eq!(&u[2..], &[2.0, 3.0]);
    }

    #[test]
    fn empty_constraint_is_free_flight() {
        let ham = free(vec![2.0]);
        let fl = LinearFlight::new(&ham, &DMatrix::zeros(0, 1)).unwrap();
        let mut u = [1.0, 4.0];
        fl.flight(&mut u, 0.25);
        assert_eq!(u, [1.5, 4.0]);
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let ham = free(vec![1.0, 1.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 2.0, -2.0, 0.0]);
        assert!(matches!(LinearFlight::new(&ham, &a), Err(FlavorError::ConstraintRankDeficient)));
    }
}
