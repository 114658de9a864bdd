//! Stochastic benchmarks: an SDE with hidden slow variable and two
//! Langevin chains (slow and fast friction/noise).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{hamiltonian_labels, Benchmark, Method, Model, Reference};
use crate::error::Result;
use crate::system::{
    LangevinSystem, MassMatrix, NoisePlacement, ParametricSystem, SeparatedHamiltonian, SlowObservable, StepSchedule,
};

const SDE_EPS: f64 = 1e-4;
const SDE_SHIFT: f64 = 10.0;
const SDE_X0: f64 = 1.0 + SDE_EPS;
const SDE_Y0: f64 = 1.0;

fn sde_schedule() -> Result<StepSchedule> {
    StepSchedule::new(1e-4, 0.01)
}

fn sde_params() -> Vec<(String, f64)> {
    vec![("epsilon".into(), SDE_EPS), ("c".into(), SDE_SHIFT)]
}

/// Mixed coordinates `u = (x - c)^{1/3} - y`, `v = (x - c)^{1/3} + y` of
/// `dx = (-y^2/2 + 5 sin 2 pi t) dt`, `dy = (x - y)/eps dt + sqrt(2/eps) dW`.
/// Both components are driven by one Brownian motion; the slow
/// observable is the hidden `x = ((u + v)/2)^3 + c`.
pub fn hidden_sde_problem() -> Result<Benchmark> {
    let sys = ParametricSystem::new(
        2,
        SDE_EPS,
        Arc::new(|u: &[f64], alpha: f64, _eps: f64, t: f64, o: &mut [f64]| {
            let s = 0.5 * (u[0] + u[1]);
            let y = 0.5 * (u[1] - u[0]);
            let soft = 4.0 / (3.0 * (u[0] + u[1]).powi(2)) * (-0.5 * y * y + 5.0 * (2.0 * PI * t).sin());
            let stiff = alpha * (s * s * s + SDE_SHIFT - y);
            o[0] = soft - stiff;
            o[1] = soft + stiff;
        }),
    )?
    .with_diffusion(Arc::new(|_: &[f64], alpha: f64, _eps: f64, _t: f64, o: &mut [f64]| {
        // Row-major 2x2; second column unused so both rows share dW_0.
        let k = (2.0 * alpha).sqrt();
        o.copy_from_slice(&[-k, 0.0, k, 0.0]);
    }))
    .time_dependent(true);
    let s0 = (SDE_X0 - SDE_SHIFT).cbrt();
    Ok(Benchmark {
        name: "hidden-sde".into(),
        anchor: "Nonautonomous SDE whose slow variable is hidden by a nonlinear change of coordinates".into(),
        model: Model::Sde(Arc::new(sys)),
        default_schedule: sde_schedule()?,
        default_method: Method::Flavor,
        initial_state: vec![s0 - SDE_Y0, s0 + SDE_Y0],
        horizon: 2.0,
        ensemble_size: 100,
        state_labels: vec!["u".into(), "v".into()],
        slow_observables: vec![SlowObservable::new("x", |u: &[f64]| vec![(0.5 * (u[0] + u[1])).powi(3) + SDE_SHIFT])],
        fast_observables: vec![SlowObservable::linear("y", vec![-0.5, 0.5])],
        reference: Reference::Fine { method: Method::Fine, h: 1e-4 },
        constraints: None,
        params: sde_params(),
        default_stride: 1,
    })
}

/// The separated form `dx = (-y^2/2 + 5 sin 2 pi t) dt`,
/// `dy = (x - y)/eps dt + sqrt(2/eps) dW`: the exact image of the mixed
/// system, since `u + v` carries no noise.
///
/// Putting the `5 sin(2 pi t)` term on `dW` instead makes `x` diffuse to
/// negative values where `-y^2/2` blows up in finite time.
pub fn hidden_sde_separated_problem() -> Result<Benchmark> {
    let sys = ParametricSystem::new(
        2,
        SDE_EPS,
        Arc::new(|u: &[f64], alpha: f64, _eps: f64, t: f64, o: &mut [f64]| {
            o[0] = -0.5 * u[1] * u[1] + 5.0 * (2.0 * PI * t).sin();
            o[1] = alpha * (u[0] - u[1]);
        }),
    )?
    .with_diffusion(Arc::new(|_: &[f64], alpha: f64, _eps: f64, _t: f64, o: &mut [f64]| {
        o.copy_from_slice(&[0.0, 0.0, (2.0 * alpha).sqrt(), 0.0]);
    }))
    .time_dependent(true);
    Ok(Benchmark {
        name: "hidden-sde-separated".into(),
        anchor: "Separated-variable form of the hidden-slow-variable SDE".into(),
        model: Model::Sde(Arc::new(sys)),
        default_schedule: sde_schedule()?,
        default_method: Method::Flavor,
        initial_state: vec![SDE_X0, SDE_Y0],
        horizon: 2.0,
        ensemble_size: 100,
        state_labels: vec!["x".into(), "y".into()],
        slow_observables: vec![SlowObservable::component("x", 0)],
        fast_observables: vec![SlowObservable::component("y", 1)],
        reference: Reference::Fine { method: Method::Fine, h: 1e-4 },
        constraints: None,
        params: sde_params(),
        default_stride: 1,
    })
}

fn langevin_observables() -> (Vec<SlowObservable>, Vec<SlowObservable>) {
    (vec![SlowObservable::linear("x-y", vec![-1.0, 1.0, 0.0, 0.0])], vec![SlowObservable::component("y", 0)])
}

/// Quartic two-mass chain, state `[y, x, p_y, p_x]`:
/// `H = |p|^2/2 + y^4/(4 eps) + (y - x)^4`, friction `c = 0.1` and noise
/// `sigma = 0.5` on both momenta, independent of `eps`.
pub fn langevin_slow_problem() -> Result<Benchmark> {
    let (eps, c, sigma) = (1e-8, 0.1, 0.5);
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(2),
        Arc::new(|q: &[f64]| (q[0] - q[1]).powi(4)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            let d = 4.0 * (q[0] - q[1]).powi(3);
            o[0] = d;
            o[1] = -d;
        }),
        Arc::new(|q: &[f64]| 0.25 * q[0].powi(4)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            o[0] = q[0].powi(3);
            o[1] = 0.0;
        }),
        eps,
    )?;
    let ls = LangevinSystem::from_sigma(Arc::new(ham), DMatrix::identity(2, 2) * c, sigma, c, NoisePlacement::Slow)?;
    let y0 = 2.1 * eps.sqrt();
    let (slow, fast) = langevin_observables();
    Ok(Benchmark {
        name: "langevin-slow".into(),
        anchor: "Quartic stiff/soft chain with slow friction and noise".into(),
        model: Model::Langevin(Arc::new(ls)),
        default_schedule: StepSchedule::new(1e-3, 1e-2)?,
        default_method: Method::Flavor,
        initial_state: vec![y0, y0 + 1.8, 0.0, 0.0],
        horizon: 30.0,
        ensemble_size: 100,
        state_labels: hamiltonian_labels(&["y", "x"]),
        slow_observables: slow,
        fast_observables: fast,
        reference: Reference::Fine { method: Method::Gla, h: 1e-3 },
        constraints: None,
        params: vec![("epsilon".into(), eps), ("c".into(), c), ("sigma".into(), sigma)],
        default_stride: 10,
    })
}

/// `H = |p|^2/2 + omega^4 y^4/4 + e^y (x - y)^2`, `eps = 1/omega^2`, with
/// friction `omega^2 c` and noise `omega sigma` on `p_y` only.
pub fn langevin_fast_problem() -> Result<Benchmark> {
    let (omega, c, sigma): (f64, f64, f64) = (100.0, 0.1, 1.0);
    let eps = 1.0 / (omega * omega);
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(2),
        Arc::new(|q: &[f64]| q[0].exp() * (q[1] - q[0]).powi(2)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            let (y, x) = (q[0], q[1]);
            let e = y.exp();
            o[0] = (2.0 + y - x) * (y - x) * e;
            o[1] = 2.0 * (x - y) * e;
        }),
        Arc::new(move |q: &[f64]| 0.25 * omega * omega * q[0].powi(4)),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            o[0] = omega * omega * q[0].powi(3);
            o[1] = 0.0;
        }),
        eps,
    )?;
    let ls = LangevinSystem::from_sigma(
        Arc::new(ham),
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c, 0.0])),
        sigma,
        c,
        NoisePlacement::Fast,
    )?;
    let y0 = 1.1 / omega;
    let (slow, fast) = langevin_observables();
    Ok(Benchmark {
        name: "langevin-fast".into(),
        anchor: "Stiff chain with friction and noise on the fast scale".into(),
        model: Model::Langevin(Arc::new(ls)),
        default_schedule: StepSchedule::new(1e-4, 1e-2)?,
        default_method: Method::Flavor,
        initial_state: vec![y0, y0 + 1.8, 0.0, 0.0],
        horizon: 10.0,
        ensemble_size: 50,
        state_labels: hamiltonian_labels(&["y", "x"]),
        slow_observables: slow,
        fast_observables: fast,
        reference: Reference::Fine { method: Method::Gla, h: 1e-4 },
        constraints: None,
        params: vec![("omega".into(), omega), ("epsilon".into(), eps), ("c".into(), c), ("sigma".into(), sigma)],
        default_stride: 10,
    })
}
