//! End-to-end checks through the public API only.

use flavors::analysis::{f_error, slow_error, stability_verdict, transfer_matrix};
use flavors::flavor::{integrate, integrate_ensemble, Sampler};
use flavors::problems::{self, Method, BENCHMARK_NAMES};
use flavors::system::StepSchedule;

#[test]
fn every_benchmark_supports_its_default_method() {
    for name in BENCHMARK_NAMES {
        let b = problems::by_name(name).unwrap();
        assert!(b.supported_methods().contains(&b.default_method), "{name}");
        assert_eq!(b.initial_state.len(), b.dim(), "{name}");
        assert_eq!(b.state_labels.len(), b.dim(), "{name}");
    }
}

#[test]
fn linear_flavor_tracks_its_closed_form_reference() {
    let b = problems::linear_stability_problem(1000.0).unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let traj = integrate(&stepper, &b.initial_state, 5.0, Sampler::every(1), 0).unwrap();
    let reference = b.reference_trajectory(5.0, 0.01, 0).unwrap();
    let phi = &b.slow_observables[0];
    assert!(slow_error(&traj, &reference, phi).unwrap() < 0.05);
    assert!(f_error(&traj, &reference, phi, 0.5).unwrap() < 0.05);
}

#[test]
fn halving_delta_reduces_the_windowed_error() {
    let b = problems::linear_stability_problem(1000.0).unwrap();
    let reference = b.reference_trajectory(5.0, 0.001, 0).unwrap();
    let phi = &b.slow_observables[0];
    let err = |delta: f64| {
        let stepper = b.stepper(Method::Flavor, StepSchedule::new(1e-7, delta).unwrap()).unwrap();
        let traj = integrate(&stepper, &b.initial_state, 5.0, Sampler::every(1), 0).unwrap();
        f_error(&traj, &reference, phi, 0.5).unwrap()
    };
    assert!(err(0.01) < err(0.04));
}

#[test]
fn ensembles_are_reproducible_and_members_differ() {
    let b = problems::hidden_sde_problem().unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let run = || integrate_ensemble(&stepper, &b.initial_state, 0.5, Sampler::every(10), 5, 4);
    let (a, c) = (run(), run());
    let finals: Vec<Vec<f64>> = a.iter().map(|r| r.as_ref().unwrap().final_state().to_vec()).collect();
    let again: Vec<Vec<f64>> = c.iter().map(|r| r.as_ref().unwrap().final_state().to_vec()).collect();
    assert_eq!(finals, again);
    assert_ne!(finals[0], finals[1]);
}

#[test]
fn large_mesostep_is_unstable_on_the_linear_problem() {
    let b = problems::linear_stability_problem(1000.0).unwrap();
    let verdict = |delta: f64| {
        let s = b.stepper(Method::Flavor, StepSchedule::new(1e-8, delta).unwrap()).unwrap();
        stability_verdict(&transfer_matrix(&s).unwrap()).unwrap().stable
    };
    assert!(verdict(1.0));
    assert!(!verdict(3.0));
}
