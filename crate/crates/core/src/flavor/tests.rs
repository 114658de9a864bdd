use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::analysis::{mesostep_jacobian, reversibility_defect, symplectic_defect};
use crate::legacy::{EulerMaruyama, ForwardEuler, SymplecticEuler, VelocityVerlet};
use crate::problems::{self, Benchmark, Method, Model};
use crate::system::{MassMatrix, ParametricSystem};

fn random_state(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

fn hamiltonian(b: &Benchmark) -> Arc<SeparatedHamiltonian> {
    b.model.hamiltonian().expect("hamiltonian benchmark").clone()
}

fn run_states(stepper: &FlavorStepper, u0: &[f64], steps: u64) -> Vec<Vec<f64>> {
    let t = steps as f64 * stepper.schedule().delta();
    integrate(stepper, u0, t, Sampler::every(1), 3).expect("run").states
}

fn assert_bitwise(a: &[Vec<f64>], b: &[Vec<f64>]) {
    assert_eq!(a.len(), b.len());
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        let same = x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
        assert!(same, "step {k}: {x:?} != {y:?}");
    }
}

/// Linear problem matrices: VE kick and drift on `[x, y, p_x, p_y]`.
fn linear_stiffness(alpha: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0 + alpha, -alpha, -alpha, alpha])
}

fn block(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(&a);
    m.view_mut((0, 2), (2, 2)).copy_from(&b);
    m.view_mut((2, 0), (2, 2)).copy_from(&c);
    m.view_mut((2, 2), (2, 2)).copy_from(&d);
    m
}

fn kick_matrix(h: f64, k: DMatrix<f64>) -> DMatrix<f64> {
    let i = DMatrix::identity(2, 2);
    block(i.clone(), DMatrix::zeros(2, 2), -k * h, i)
}

fn drift_matrix(h: DMatrix<f64>) -> DMatrix<f64> {
    let i = DMatrix::identity(2, 2);
    block(i.clone(), h, DMatrix::zeros(2, 2), i)
}

#[test]
fn tau_equal_delta_is_one_legacy_step() {
    for name in ["linear", "triple-chain", "nonlinear-stiff-soft", "fpu-short", "primitive-md", "van-der-pol"] {
        let b = problems::by_name(name).unwrap();
        let h = b.default_schedule.tau();
        let sched = StepSchedule::new(h, h).unwrap();
        let flavor = b.stepper(Method::Flavor, sched).unwrap();
        let fine = b.stepper(Method::Fine, sched).unwrap();
        assert_bitwise(&run_states(&flavor, &b.initial_state, 200), &run_states(&fine, &b.initial_state, 200));
        if b.model.hamiltonian().is_some() {
            let rev = b.stepper(Method::Reversible, sched).unwrap();
            let strang = b.stepper(Method::FineReversible, sched).unwrap();
            assert_bitwise(&run_states(&rev, &b.initial_state, 200), &run_states(&strang, &b.initial_state, 200));
        }
    }
}

#[test]
fn forced_tau_equal_delta_is_one_legacy_step() {
    let b = problems::kapitza_problem().unwrap();
    let h = b.default_schedule.tau();
    let sched = StepSchedule::new(h, h).unwrap();
    let flavor = b.stepper(Method::Flavor, sched).unwrap();
    let fine = b.stepper(Method::Fine, sched).unwrap();
    assert_bitwise(&run_states(&flavor, &b.initial_state, 1000), &run_states(&fine, &b.initial_state, 1000));
}

#[test]
fn strang_pair_of_symplectic_euler_is_velocity_verlet() {
    let b = problems::nonlinear_stiff_soft_problem().unwrap();
    let ham = hamiltonian(&b);
    let eps = ham.epsilon();
    let se: Arc<dyn OneStepMap> = Arc::new(SymplecticEuler::new(ham.clone()));
    let strang = FlavorStepper::legacy_strang(se, 1e-5, 1.0 / eps).unwrap();
    let vv = FlavorStepper::legacy(Arc::new(VelocityVerlet::new(ham)), 1e-5, 1.0 / eps).unwrap();
    let (a, c) = (run_states(&strang, &b.initial_state, 100), run_states(&vv, &b.initial_state, 100));
    for (x, y) in a.iter().zip(&c) {
        for (p, q) in x.iter().zip(y) {
            assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }
}

#[test]
fn nonintrusive_mesostep_is_product_of_kick_drift_matrices() {
    let omega = 1000.0;
    let b = problems::linear_stability_problem(omega).unwrap();
    let alpha = omega * omega;
    for (tau, delta) in [(1e-8, 1.0), (1e-5, 0.01), (0.1, 0.5)] {
        let stepper = b.stepper(Method::Flavor, StepSchedule::new(tau, delta).unwrap()).unwrap();
        let i = DMatrix::identity(2, 2);
        let t = drift_matrix(&i * (delta - tau))
            * kick_matrix(delta - tau, linear_stiffness(0.0))
            * drift_matrix(&i * tau)
            * kick_matrix(tau, linear_stiffness(alpha));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u = random_state(&mut rng, 4, 1.0);
            let expected = &t * DVector::from_column_slice(&u);
            let got = stepper.apply(&u, 0, 0).unwrap();
            let scale = expected.amax().max(1.0);
            for (g, e) in got.iter().zip(expected.iter()) {
                assert!((g - e).abs() <= 1e-12 * scale, "tau={tau} delta={delta}: {g} vs {e}");
            }
        }
    }
}

#[test]
fn artificial_mesostep_is_product_of_its_three_maps() {
    let omega = 1000.0;
    let b = problems::linear_stability_problem(omega).unwrap();
    let ham = hamiltonian(&b);
    let alpha = omega * omega;
    let i = DMatrix::identity(2, 2);
    // Mass-weighted projection onto the tangent of the frozen direction y - x.
    let proj = DMatrix::from_element(2, 2, 0.5);
    let stiff_only = DMatrix::from_row_slice(2, 2, &[alpha, -alpha, -alpha, alpha]);
    for (tau, delta) in [(1e-5, 1.0), (1e-4, 0.01)] {
        let sched = StepSchedule::new(tau, delta).unwrap();
        let stepper = FlavorStepper::artificial(
            ham.clone(),
            b.constraints.as_ref().unwrap(),
            sched,
            FastSubstep::SymplecticEuler,
        )
        .unwrap();
        let soft_kick = kick_matrix(delta, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let fast = kick_matrix(tau, stiff_only.clone()) * drift_matrix(&i * tau);
        let flight = drift_matrix(&proj * (delta - tau));
        let t = flight * fast * soft_kick;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let u = random_state(&mut rng, 4, 1.0);
            let expected = &t * DVector::from_column_slice(&u);
            let got = stepper.apply(&u, 0, 0).unwrap();
            let scale = expected.amax().max(1.0);
            for (g, e) in got.iter().zip(expected.iter()) {
                assert!((g - e).abs() <= 1e-12 * scale, "{g} vs {e}");
            }
        }
    }
}

#[test]
fn artificial_without_constraints_is_kick_fast_free_drift() {
    let b = problems::triple_chain_problem().unwrap();
    let ham = hamiltonian(&b);
    let sched = b.default_schedule;
    let (tau, delta) = (sched.tau(), sched.delta());
    let stepper =
        FlavorStepper::artificial(ham.clone(), &ConstraintSpec::none(3), sched, FastSubstep::SymplecticEuler).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_state(&mut rng, 6, 0.5);
    let mut expected = u.clone();
    SoftKick::new(ham.clone()).step(&mut expected, delta, 0.0, 0.0).unwrap();
    SymplecticEulerAdjoint::new(Arc::new(ham.stiff_part())).step(&mut expected, tau, 1.0 / ham.epsilon(), 0.0).unwrap();
    for i in 0..3 {
        expected[i] += (delta - tau) * expected[3 + i];
    }
    let got = stepper.apply(&u, 0, 0).unwrap();
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-14 * e.abs().max(1.0));
    }
}

#[test]
fn artificial_requires_registered_flow_for_exact_substep() {
    let b = problems::nonlinear_stiff_soft_problem().unwrap();
    let err = FlavorStepper::artificial(
        hamiltonian(&b),
        b.constraints.as_ref().unwrap(),
        b.default_schedule,
        FastSubstep::Exact,
    )
    .unwrap_err();
    assert_eq!(err, FlavorError::NoExactFastFlow);
}

#[test]
fn variational_four_line_update() {
    let b = problems::nonlinear_stiff_soft_problem().unwrap();
    let ham = hamiltonian(&b);
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let (tau, delta) = (b.default_schedule.tau(), b.default_schedule.delta());
    let alpha = 1.0 / ham.epsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let u = random_state(&mut rng, 4, 0.8);
        let (q, p) = (&u[..2], &u[2..]);
        let (mut gv, mut gu) = ([0.0; 2], [0.0; 2]);
        ham.soft_gradient(q, &mut gv);
        ham.stiff_gradient(q, &mut gu);
        let p1: Vec<f64> = (0..2).map(|i| p[i] - tau * (gv[i] + alpha * gu[i])).collect();
        let q1: Vec<f64> = (0..2).map(|i| q[i] + tau * p1[i]).collect();
        ham.soft_gradient(&q1, &mut gv);
        let h = delta - tau;
        let p2: Vec<f64> = (0..2).map(|i| p1[i] - h * gv[i]).collect();
        let q2: Vec<f64> = (0..2).map(|i| q1[i] + h * p2[i]).collect();
        let expected = [q2, p2].concat();
        let got = stepper.apply(&u, 0, 0).unwrap();
        assert_bitwise(&[got], &[expected]);
    }
}

#[test]
fn reversible_flavor_is_time_reversible() {
    let b = problems::nonlinear_stiff_soft_problem().unwrap();
    let stepper = b.stepper(Method::Reversible, b.default_schedule).unwrap();
    assert!(stepper.is_palindromic());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let u = random_state(&mut rng, 4, 0.8);
        let d = reversibility_defect(&stepper, &u).unwrap();
        assert!(d <= 1e-10, "defect {d}");
    }
}

#[test]
fn nonintrusive_flavor_is_not_time_reversible() {
    let b = problems::nonlinear_stiff_soft_problem().unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    assert!(!stepper.is_palindromic());
    let u = [0.5, 1.0, 0.3, -0.2];
    assert!(reversibility_defect(&stepper, &u).unwrap() > 1e-8);
}

#[test]
fn reversible_flavor_on_fpu_is_symplectic() {
    let b = problems::fpu_short_problem().unwrap();
    let stepper = b.stepper(Method::Reversible, b.default_schedule).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..3 {
        let u = random_state(&mut rng, 12, 0.5);
        let j = mesostep_jacobian(&stepper, &u, 0, 0, 1e-6).unwrap();
        let d = symplectic_defect(&j).unwrap();
        assert!(d <= 1e-5, "defect {d}");
    }
}

#[test]
fn fpu_flavor_commutes_with_chain_reflection() {
    let b = problems::fpu_short_problem().unwrap();
    let n = b.dim() / 2;
    let reflect = |u: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; 2 * n];
        for i in 0..n {
            v[i] = -u[n - 1 - i];
            v[n + i] = -u[2 * n - 1 - i];
        }
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for method in [Method::Flavor, Method::Reversible, Method::Artificial] {
        let stepper = b.stepper(method, b.default_schedule).unwrap();
        for _ in 0..5 {
            let u = random_state(&mut rng, 2 * n, 1.0);
            let a = reflect(&stepper.apply(&u, 0, 0).unwrap());
            let c = stepper.apply(&reflect(&u), 0, 0).unwrap();
            for (x, y) in a.iter().zip(&c) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{method}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn forcing_is_evaluated_on_the_fast_clock() {
    // Unit mass, no potentials, forcing f(t) = t: each mesostep adds tau * (k tau) to p.
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(1),
        Arc::new(|_: &[f64]| 0.0),
        Arc::new(|_: &[f64], o: &mut [f64]| o[0] = 0.0),
        Arc::new(|_: &[f64]| 0.0),
        Arc::new(|_: &[f64], o: &mut [f64]| o[0] = 0.0),
        1.0,
    )
    .unwrap();
    let sys = Arc::new(ForcedHamiltonian {
        hamiltonian: Arc::new(ham),
        forcing: Arc::new(|t: f64, _: &[f64], o: &mut [f64]| o[0] = t),
    });
    let (tau, delta) = (0.001, 0.1);
    let stepper = FlavorStepper::nonautonomous(sys, StepSchedule::new(tau, delta).unwrap()).unwrap();
    let traj = integrate(&stepper, &[0.0, 0.0], 50.0 * delta, Sampler::every(1), 0).unwrap();
    for (k, u) in traj.states.iter().enumerate() {
        let expected: f64 = (0..k).map(|j| tau * j as f64 * tau).sum();
        assert!((u[1] - expected).abs() <= 1e-15, "k={k}: {} vs {expected}", u[1]);
        assert_eq!(traj.fast_clock[k], k as f64 * tau);
        assert_eq!(traj.times[k], k as f64 * delta);
    }
}

#[test]
fn unforced_kapitza_equals_plain_flavor() {
    let b = problems::kapitza_with_forcing(0.0).unwrap();
    let Model::Forced(f) = &b.model else { panic!("forced model expected") };
    let plain = FlavorStepper::nonintrusive(
        Arc::new(SymplecticEuler::new(f.hamiltonian.clone())),
        b.default_schedule,
        f.hamiltonian.epsilon(),
    )
    .unwrap();
    let forced = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    assert_bitwise(&run_states(&forced, &b.initial_state, 500), &run_states(&plain, &b.initial_state, 500));
}

#[test]
fn sde_flavor_without_noise_is_deterministic_flavor() {
    let sys = Arc::new(
        ParametricSystem::new(
            2,
            1e-3,
            Arc::new(|u: &[f64], alpha: f64, _eps: f64, t: f64, o: &mut [f64]| {
                o[0] = -u[1] + t.sin();
                o[1] = u[0] + alpha * (u[0] - u[1].powi(3));
            }),
        )
        .unwrap()
        .time_dependent(true),
    );
    let sched = StepSchedule::new(5e-5, 0.01).unwrap();
    let sde = FlavorStepper::sde(Arc::new(EulerMaruyama::new(sys.clone())), sched, 1e-3).unwrap();
    let ode = FlavorStepper::nonintrusive(Arc::new(ForwardEuler::new(sys)), sched, 1e-3).unwrap();
    assert!(sde.is_stochastic());
    let u0 = [1.0, 0.5];
    assert_bitwise(&run_states(&sde, &u0, 300), &run_states(&ode, &u0, 300));
}

fn frictionless(b: &Benchmark) -> LangevinSystem {
    let Model::Langevin(ls) = &b.model else { panic!("langevin model expected") };
    let n = ls.hamiltonian.n_dof();
    LangevinSystem::new(ls.hamiltonian.clone(), DMatrix::zeros(n, n), ls.beta, ls.noise_placement).unwrap()
}

#[test]
fn langevin_flavor_without_friction_is_hamiltonian_flavor() {
    for b in [problems::langevin_slow_problem().unwrap(), problems::langevin_fast_problem().unwrap()] {
        let ls = frictionless(&b);
        let ham = ls.hamiltonian.clone();
        let se: Arc<dyn OneStepMap> = Arc::new(SymplecticEuler::new(ham.clone()));
        let sched = b.default_schedule;
        let pairs = [
            (
                FlavorStepper::langevin(&ls, se.clone(), sched).unwrap(),
                FlavorStepper::nonintrusive(se.clone(), sched, ham.epsilon()).unwrap(),
            ),
            (
                FlavorStepper::langevin_reversible(&ls, se.clone(), sched).unwrap(),
                FlavorStepper::reversible(se.clone(), sched, ham.epsilon()).unwrap(),
            ),
        ];
        for (noisy, plain) in pairs {
            assert!(noisy.is_stochastic());
            assert_bitwise(&run_states(&noisy, &b.initial_state, 300), &run_states(&plain, &b.initial_state, 300));
        }
    }
}

#[test]
fn stochastic_mesosteps_are_reproducible() {
    let b = problems::langevin_slow_problem().unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let u = &b.initial_state;
    assert_eq!(stepper.apply(u, 4, 9).unwrap(), stepper.apply(u, 4, 9).unwrap());
    assert_ne!(stepper.apply(u, 4, 9).unwrap(), stepper.apply(u, 5, 9).unwrap());
    assert_ne!(stepper.apply(u, 4, 9).unwrap(), stepper.apply(u, 4, 10).unwrap());
}

#[test]
fn ensemble_members_do_not_depend_on_ensemble_size() {
    let b = problems::hidden_sde_problem().unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let small = integrate_ensemble(&stepper, &b.initial_state, 0.2, Sampler::every(5), 77, 3);
    let large = integrate_ensemble(&stepper, &b.initial_state, 0.2, Sampler::every(5), 77, 8);
    for (a, c) in small.iter().zip(&large) {
        assert_eq!(a.as_ref().unwrap().states, c.as_ref().unwrap().states);
    }
}

#[test]
fn short_horizon_keeps_only_initial_state() {
    let b = problems::linear_stability_problem(10.0).unwrap();
    let stepper = b.stepper(Method::Flavor, StepSchedule::new(0.001, 0.01).unwrap()).unwrap();
    let traj = integrate(&stepper, &b.initial_state, 0.005, Sampler::default(), 0).unwrap();
    assert_eq!(traj.states, vec![b.initial_state.clone()]);
    assert_eq!(traj.mesosteps, 0);
}

#[test]
fn integrate_rejects_bad_inputs() {
    let b = problems::linear_stability_problem(10.0).unwrap();
    let stepper = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let err = integrate(&stepper, &b.initial_state, 0.0, Sampler::default(), 0).unwrap_err();
    assert!(matches!(err.error, FlavorError::InvalidInput(_)));
    let err = integrate(&stepper, &[0.0; 3], 1.0, Sampler::default(), 0).unwrap_err();
    assert!(matches!(err.error, FlavorError::LayoutMismatch(_)));
}

#[test]
fn divergence_reports_mesostep_and_partial_trajectory() {
    // Nonintrusive FLAVOR with tau * delta * omega^2 well above 4 is unstable.
    let b = problems::linear_stability_problem(1000.0).unwrap();
    let stepper = b.stepper(Method::Flavor, StepSchedule::new(1e-3, 0.1).unwrap()).unwrap();
    let fail = integrate(&stepper, &b.initial_state, 1e4, Sampler::every(1), 0).unwrap_err();
    let FlavorError::NonFiniteState { step: Some(k) } = fail.error else { panic!("unexpected {:?}", fail.error) };
    assert_eq!(fail.partial.mesosteps, k);
    assert_eq!(fail.partial.len() as u64, k + 1);
}

#[test]
fn call_counts_follow_the_recipe() {
    let b = problems::van_der_pol_hidden().unwrap();
    let flavor = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    let traj = integrate(&flavor, &b.initial_state, 1.0, Sampler::every(10), 0).unwrap();
    assert_eq!(traj.mesosteps, 100);
    assert_eq!(traj.legacy_calls, 200);
    assert_eq!(traj.stiff_calls, 100);
}

#[test]
fn reversible_recipes_are_palindromic() {
    let b = problems::langevin_slow_problem().unwrap();
    let Model::Langevin(ls) = &b.model else { unreachable!() };
    let se: Arc<dyn OneStepMap> = Arc::new(SymplecticEuler::new(ls.hamiltonian.clone()));
    assert!(FlavorStepper::langevin_reversible(ls, se.clone(), b.default_schedule).unwrap().is_palindromic());
    assert!(!FlavorStepper::langevin(ls, se, b.default_schedule).unwrap().is_palindromic());
}

#[test]
fn adjoint_is_required_for_reversible_kinds() {
    let b = problems::van_der_pol_hidden().unwrap();
    let Model::Ode(m) = &b.model else { unreachable!() };
    let fe: Arc<dyn OneStepMap> = Arc::new(ForwardEuler::new(m.clone()));
    assert_eq!(
        FlavorStepper::reversible(fe, b.default_schedule, b.epsilon()).unwrap_err(),
        FlavorError::AdjointMissing
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_substeps_add_up_to_delta(tau_frac in 0.0..=1.0f64, delta in 1e-4..1.0f64) {
        let tau = (tau_frac * delta).max(1e-12);
        let sched = StepSchedule::new(tau, delta).unwrap();
        let b = problems::linear_stability_problem(100.0).unwrap();
        for method in [Method::Flavor, Method::Reversible] {
            let s = b.stepper(method, sched).unwrap();
            prop_assert!((s.deterministic_step_total() - delta).abs() <= 4.0 * f64::EPSILON * delta);
        }
        let art = b.stepper(Method::Artificial, sched).unwrap();
        // Soft kick spans the whole mesostep; fast substep and flight split it.
        let split: f64 = art.stages()[1..].iter().map(|s| s.h).sum();
        prop_assert!((split - delta).abs() <= 4.0 * f64::EPSILON * delta);
        prop_assert_eq!(art.stages()[0].h, delta);
    }

    #[test]
    fn tau_equal_delta_degenerates_on_random_states(seed in any::<u64>(), h in 1e-6..1e-3f64) {
        let b = problems::nonlinear_stiff_soft_problem().unwrap();
        let sched = StepSchedule::new(h, h).unwrap();
        let flavor = b.stepper(Method::Flavor, sched).unwrap();
        let fine = b.stepper(Method::Fine, sched).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_state(&mut rng, 4, 0.5);
        let (a, c) = (flavor.apply(&u, 0, 0).unwrap(), fine.apply(&u, 0, 0).unwrap());
        prop_assert!(a.iter().zip(&c).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn mesostep_count_matches_horizon(n in 1u64..5000, delta in 1e-4..0.1f64) {
        prop_assert_eq!(mesostep_count(n as f64 * delta, delta), n);
    }
}
