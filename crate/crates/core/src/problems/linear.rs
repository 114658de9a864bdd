//! Linear stiff/soft oscillator pair
//! `H = (p_x^2 + p_y^2)/2 + x^2/2 + (omega^2/2)(y - x)^2`, with `eps = 1/omega^2`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{hamiltonian_labels, Benchmark, Method, Model, Reference};
use crate::error::{FlavorError, Result};
use crate::flavor::ConstraintSpec;
use crate::legacy::HarmonicPairFlow;
use crate::system::{MassMatrix, SeparatedHamiltonian, SlowObservable, StepSchedule};

/// Exact flow `u(t) = exp(A t) u0` of the linear problem.
pub fn linear_exact_flow(omega: f64, u0: &[f64], t: f64) -> Vec<f64> {
    let s = omega * omega;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        -1.0 - s, s, 0.0, 0.0,
        s, -s, 0.0, 0.0,
    ]);
    ((a * t).exp() * DVector::from_column_slice(u0)).as_slice().to_vec()
}

/// State `[x, y, p_x, p_y]`; `omega = 0` gives two uncoupled free/harmonic
/// coordinates with `eps = 1`.
pub fn linear_stability_problem(omega: f64) -> Result<Benchmark> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(FlavorError::InvalidInput("omega must be non-negative".into()));
    }
    let (eps, k) = if omega > 0.0 { (1.0 / (omega * omega), 1.0) } else { (1.0, 0.0) };
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(2),
        Arc::new(|q: &[f64]| 0.5 * q[0] * q[0]),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            o[0] = q[0];
            o[1] = 0.0;
        }),
        Arc::new(move |q: &[f64]| 0.5 * k * (q[1] - q[0]).powi(2)),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            let d = k * (q[1] - q[0]);
            o[0] = -d;
            o[1] = d;
        }),
        eps,
    )?
    .with_exact_fast_flow(Arc::new(HarmonicPairFlow::new(vec![1.0, 1.0], vec![(0, 1, k)])?));
    let x0 = 0.8;
    let y0 = if omega > 0.0 { x0 + 1.1 / omega } else { x0 };
    let u0 = vec![x0, y0, 0.0, 0.0];
    let reference_u0 = u0.clone();
    Ok(Benchmark {
        name: "linear".into(),
        anchor: "Linear soft oscillator coupled to a stiff spring; exact flow by matrix exponential".into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: StepSchedule::new(if omega > 0.0 { 0.1 * eps } else { 1e-3 }, 0.01)?,
        default_method: Method::Flavor,
        initial_state: u0,
        horizon: 10.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["x", "y"]),
        slow_observables: vec![SlowObservable::linear("slow", vec![0.5, 0.5])],
        fast_observables: vec![SlowObservable::linear("fast", vec![-1.0, 1.0])],
        reference: Reference::ClosedForm(Arc::new(move |t| linear_exact_flow(omega, &reference_u0, t))),
        constraints: Some(ConstraintSpec::LinearFreeze(DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]))),
        params: vec![("omega".into(), omega), ("epsilon".into(), eps)],
        default_stride: 1,
    })
}
