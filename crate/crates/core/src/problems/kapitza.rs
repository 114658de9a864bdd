//! Pendulum with a rapidly oscillating pivot, `l theta'' = (g + A sin(2 pi omega t)) sin theta`,
//! measured from the upright position.

use std::sync::Arc;

use super::{hamiltonian_labels, Benchmark, Method, Model, Reference};
use crate::error::Result;
use crate::system::{ForcedHamiltonian, MassMatrix, SeparatedHamiltonian, SlowObservable, StepSchedule};

const G: f64 = 9.8;
const LENGTH: f64 = 9.0;
const OMEGA: f64 = 1000.0;

/// Forcing amplitude `A = omega^2` (the upright position is stabilized).
pub fn kapitza_problem() -> Result<Benchmark> {
    kapitza_with_forcing(OMEGA * OMEGA)
}

/// Pendulum with forcing amplitude `amplitude`; zero gives the free
/// pendulum, unstable upright.
pub fn kapitza_with_forcing(amplitude: f64) -> Result<Benchmark> {
    let ham = SeparatedHamiltonian::new(
        MassMatrix::diagonal(vec![LENGTH])?,
        Arc::new(|q: &[f64]| G * q[0].cos()),
        Arc::new(|q: &[f64], o: &mut [f64]| o[0] = -G * q[0].sin()),
        Arc::new(|_: &[f64]| 0.0),
        Arc::new(|_: &[f64], o: &mut [f64]| o[0] = 0.0),
        1.0,
    )?;
    let forced = ForcedHamiltonian {
        hamiltonian: Arc::new(ham),
        forcing: Arc::new(move |t: f64, q: &[f64], o: &mut [f64]| {
            o[0] = amplitude * (2.0 * std::f64::consts::PI * OMEGA * t).sin() * q[0].sin();
        }),
    };
    let tau = 0.2 / (OMEGA * LENGTH.sqrt());
    let (name, anchor) = if amplitude == 0.0 {
        ("kapitza-unforced", "Inverted pendulum without pivot forcing; falls from upright")
    } else {
        ("kapitza", "Inverted pendulum stabilized by a fast vertical pivot oscillation")
    };
    Ok(Benchmark {
        name: name.into(),
        anchor: anchor.into(),
        model: Model::Forced(Arc::new(forced)),
        default_schedule: StepSchedule::new(tau, 0.002)?,
        default_method: Method::Flavor,
        initial_state: vec![0.2, 0.0],
        horizon: 10.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["theta"]),
        slow_observables: vec![SlowObservable::component("theta", 0)],
        fast_observables: vec![],
        reference: Reference::Fine { method: Method::Fine, h: tau },
        constraints: None,
        params: vec![("g".into(), G), ("l".into(), LENGTH), ("omega".into(), OMEGA), ("amplitude".into(), amplitude)],
        default_stride: 5,
    })
}
