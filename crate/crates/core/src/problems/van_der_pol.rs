//! Van der Pol oscillator `x' = -eps y`, `y' = (x + y - y^3/3)/eps`, in
//! Cartesian form and in polar coordinates `(x, y) = (r sin theta, r cos theta)`
//! where the slow and fast variables are mixed.

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use super::{Benchmark, Method, Model, Reference};
use crate::error::Result;
use crate::system::{ParametricSystem, SlowObservable, StepSchedule, StiffSplitSystem};

const EPS: f64 = 1e-3;

fn schedule() -> Result<StepSchedule> {
    StepSchedule::new(5e-5, 0.01)
}

/// Polar form, state `[r, theta]`. Nothing in the coordinates separates the
/// slow variable `x = r sin theta` from the fast one.
pub fn van_der_pol_hidden() -> Result<Benchmark> {
    let sys = ParametricSystem::new(
        2,
        EPS,
        Arc::new(|u: &[f64], alpha: f64, eps: f64, _t: f64, o: &mut [f64]| {
            let (r, th) = (u[0], u[1]);
            let (s, c) = th.sin_cos();
            let c3 = c * c * c;
            let a = r * c + r * s - r * r * r * c3 / 3.0;
            let b = c + s - r * r * c3 / 3.0;
            o[0] = alpha * a * c - eps * r * c * s;
            o[1] = -eps * c * c - alpha * b * s;
        }),
    )?;
    Ok(Benchmark {
        name: "van-der-pol".into(),
        anchor: "Van der Pol oscillator in polar coordinates, slow and fast variables hidden".into(),
        model: Model::Ode(Arc::new(sys)),
        default_schedule: schedule()?,
        default_method: Method::Flavor,
        initial_state: vec![2f64.sqrt(), FRAC_PI_4],
        horizon: 5.0 / EPS,
        ensemble_size: 1,
        state_labels: vec!["r".into(), "theta".into()],
        slow_observables: vec![SlowObservable::new("x", |u: &[f64]| vec![u[0] * u[1].sin()]).with_lipschitz(1.0)],
        fast_observables: vec![SlowObservable::new("y", |u: &[f64]| vec![u[0] * u[1].cos()])],
        reference: Reference::Fine { method: Method::Fine, h: 5e-5 },
        constraints: None,
        params: vec![("epsilon".into(), EPS)],
        default_stride: 10,
    })
}

/// Cartesian form, state `[x, y]`.
pub fn van_der_pol_cartesian() -> Result<Benchmark> {
    let sys = StiffSplitSystem::new(
        2,
        Arc::new(|u: &[f64], o: &mut [f64]| {
            o[0] = -EPS * u[1];
            o[1] = 0.0;
        }),
        Arc::new(|u: &[f64], o: &mut [f64]| {
            o[0] = 0.0;
            o[1] = u[0] + u[1] - u[1].powi(3) / 3.0;
        }),
        EPS,
    )?;
    Ok(Benchmark {
        name: "van-der-pol-cartesian".into(),
        anchor: "Van der Pol oscillator with explicit slow/fast split".into(),
        model: Model::Ode(Arc::new(sys)),
        default_schedule: schedule()?,
        default_method: Method::Flavor,
        initial_state: vec![1.0, 1.0],
        horizon: 5.0 / EPS,
        ensemble_size: 1,
        state_labels: vec!["x".into(), "y".into()],
        slow_observables: vec![SlowObservable::component("x", 0)],
        fast_observables: vec![SlowObservable::component("y", 1)],
        reference: Reference::Fine { method: Method::Fine, h: 5e-5 },
        constraints: None,
        params: vec![("epsilon".into(), EPS)],
        default_stride: 10,
    })
}
