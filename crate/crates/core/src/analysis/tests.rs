use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::FlavorError;
use crate::flavor::{FlavorStepper, Stage, StepperKind, Trajectory};
use crate::legacy::OuExactFlow;
use crate::noise::{fill_standard_normal, mesostep_rng, trajectory_seed};
use crate::problems::{linear_stability_problem, Method};
use crate::system::{SlowObservable, StepSchedule};

fn trajectory(times: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
    Trajectory {
        fast_clock: times.clone(),
        mesosteps: times.len().saturating_sub(1) as u64,
        times,
        states,
        energies: None,
        legacy_calls: 0,
        stiff_calls: 0,
        seed: 0,
        delta: 0.0,
        tau: 0.0,
    }
}

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn linear_transfer(method: Method, tau: f64, delta: f64) -> DMatrix<f64> {
    let b = linear_stability_problem(1000.0).unwrap();
    let s = b.stepper(method, StepSchedule::new(tau, delta).unwrap()).unwrap();
    transfer_matrix(&s).unwrap()
}

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

#[test]
fn identity_stepper_has_identity_transfer_matrix() {
    let b = linear_stability_problem(1000.0).unwrap();
    let Some(ham) = b.model.hamiltonian() else { panic!() };
    let se = std::sync::Arc::new(crate::legacy::SymplecticEuler::new(ham.clone()));
    let s = FlavorStepper::from_stages(StepperKind::Legacy, b.default_schedule, vec![Stage::map(se, 0.0, 1.0, 0.0)])
        .unwrap();
    let t = transfer_matrix(&s).unwrap();
    assert_eq!(t, DMatrix::identity(4, 4));
}

#[test]
fn rotation_is_stable_with_unit_radius() {
    let v = stability_verdict(&rotation(0.3)).unwrap();
    assert!((v.spectral_radius - 1.0).abs() < 1e-14);
    assert!(v.stable);
    assert!(!stability_verdict(&(rotation(0.3) * 1.001)).unwrap().stable);
    assert!(stability_verdict(&DMatrix::from_element(2, 2, f64::NAN)).is_err());
}

#[test]
fn nonlinear_stepper_is_rejected() {
    let b = crate::problems::nonlinear_stiff_soft_problem().unwrap();
    let s = b.stepper(Method::Flavor, b.default_schedule).unwrap();
    assert!(matches!(transfer_matrix(&s), Err(FlavorError::NotLinear)));
}

#[test]
fn characteristic_polynomial_of_known_matrix() {
    let t = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, 3.0, 0.0, 4.0, 5.0, -1.0]);
    let c = characteristic_polynomial(&t).unwrap();
    // (l - 2)(l - 3)(l + 1) = l^3 - 4 l^2 + l + 6
    for (x, e) in c.iter().zip([1.0, -4.0, 1.0, 6.0]) {
        assert!((x - e).abs() < 1e-12);
    }
}

#[test]
fn nonintrusive_polynomial_matches_asymptotic_form() {
    let d: f64 = 1.0;
    let c = characteristic_polynomial(&linear_transfer(Method::Flavor, 1e-10, d)).unwrap();
    let expected = [1.0, d * d - 4.0, 6.0 - 2.0 * d * d, d * d - 4.0, 1.0];
    for (x, e) in c.iter().zip(expected) {
        assert!((x - e).abs() <= 1e-3, "{c:?}");
    }
}

#[test]
fn artificial_polynomial_matches_normalized_asymptotic_form() {
    let d: f64 = 1.0;
    let c = characteristic_polynomial(&linear_transfer(Method::Artificial, 1e-5, d)).unwrap();
    let expected = [1.0, (d * d - 8.0) / 2.0, (12.0 - 2.0 * d * d) / 2.0, (d * d - 8.0) / 2.0, 1.0];
    for (x, e) in c.iter().zip(expected) {
        assert!((x - e).abs() <= 1e-3, "{c:?}");
    }
}

#[test]
fn stability_thresholds() {
    let stable = |m, tau, d| stability_verdict(&linear_transfer(m, tau, d)).unwrap().stable;
    assert!(stable(Method::Flavor, 1e-8, 1.9));
    assert!(!stable(Method::Flavor, 1e-8, 2.1));
    assert!(stable(Method::Artificial, 1e-5, 2.7));
    assert!(!stable(Method::Artificial, 1e-5, 2.9));
}

#[test]
fn scan_is_downward_closed_in_tau() {
    let deltas: Vec<f64> = (1..=12).map(|k| 0.2 * k as f64).collect();
    let ratios = [0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0];
    for method in [Method::Flavor, Method::Artificial] {
        let g = stability_domain_scan(method, 1000.0, &deltas, &ratios).unwrap();
        for j in 0..deltas.len() {
            let mut seen_unstable = false;
            for i in 0..ratios.len() {
                match g.cell(i, j).stable {
                    Some(false) => seen_unstable = true,
                    Some(true) => assert!(!seen_unstable, "{method} delta={} ratio={}", deltas[j], ratios[i]),
                    None => {}
                }
            }
        }
    }
}

#[test]
fn scan_cell_at_tau_equal_delta_is_symplectic_euler_bound() {
    let omega = 1000.0;
    let eps = 1.0 / (omega * omega);
    let h_crit = std::f64::consts::SQRT_2 / omega;
    // Stiff mode of the pair has frequency sqrt(2) omega.
    let edge = h_crit;
    for (h, expect) in [(0.95 * edge, true), (1.05 * edge, false)] {
        let g = stability_domain_scan(Method::Flavor, omega, &[h], &[h / eps]).unwrap();
        assert_eq!(g.cell(0, 0).stable, Some(expect), "h={h}");
    }
}

#[test]
fn scan_without_stiffness_is_stable_below_two() {
    let deltas = [0.5, 1.0, 1.5, 1.99];
    let g = stability_domain_scan(Method::Flavor, 0.0, &deltas, &[0.1, 0.5, 1.0]).unwrap();
    for c in &g.cells {
        assert_ne!(c.stable, Some(false), "{c:?}");
    }
    let g = stability_domain_scan(Method::Flavor, 0.0, &[2.01], &[1e-6]).unwrap();
    assert_eq!(g.cells[0].stable, Some(false));
    assert!(stability_domain_scan(Method::Flavor, 1.0, &[-1.0], &[1.0]).is_err());
}

#[test]
fn errors_vanish_on_identical_trajectories() {
    let t = grid(200, 0.01);
    let states: Vec<Vec<f64>> = t.iter().map(|s| vec![s.sin(), s.cos()]).collect();
    let a = trajectory(t, states);
    let phi = SlowObservable::component("x", 0);
    assert_eq!(f_error(&a, &a, &phi, 0.5).unwrap(), 0.0);
    assert_eq!(slow_error(&a, &a, &phi).unwrap(), 0.0);
}

#[test]
fn constant_shift_gives_observable_of_shift() {
    let t = grid(400, 0.005);
    let a: Vec<Vec<f64>> = t.iter().map(|s| vec![s.sin(), (3.0 * s).cos()]).collect();
    let c = [0.25, -0.5];
    let b: Vec<Vec<f64>> = a.iter().map(|u| vec![u[0] + c[0], u[1] + c[1]]).collect();
    let (a, b) = (trajectory(t.clone(), a), trajectory(t, b));
    let phi = SlowObservable::linear("w", vec![2.0, 1.0]);
    let expected = (2.0 * c[0] + c[1]).abs();
    assert!((f_error(&a, &b, &phi, 0.5).unwrap() - expected).abs() < 1e-12);
    assert!((slow_error(&a, &b, &phi).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn window_and_horizon_checks() {
    let a = trajectory(grid(20, 0.1), vec![vec![0.0]; 21]);
    let phi = SlowObservable::component("x", 0);
    assert!(matches!(f_error(&a, &a, &phi, 0.5), Err(FlavorError::WindowTooSmall { .. })));
    let b = trajectory(grid(30, 0.1), vec![vec![0.0]; 31]);
    assert!(matches!(slow_error(&a, &b, &phi), Err(FlavorError::TimeGridMismatch(..))));
    assert!(matches!(f_error(&a, &b, &phi, 0.1), Err(FlavorError::TimeGridMismatch(..))));
}

#[test]
fn slow_error_against_exact_slow_rotation() {
    // Exact slow mode of the linear problem as omega grows.
    let b = linear_stability_problem(1000.0).unwrap();
    let s = b.stepper(Method::Artificial, StepSchedule::new(1e-4, 1e-3).unwrap()).unwrap();
    let traj = crate::flavor::integrate(&s, &b.initial_state, 2.0, crate::flavor::Sampler::every(10), 0).unwrap();
    let u0 = &b.initial_state;
    let (x0, v0) = (0.5 * (u0[0] + u0[1]), 0.5 * (u0[2] + u0[3]));
    // Slow coordinate (x + y)/2 obeys z'' = -z/2.
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let exact = trajectory(
        traj.times.clone(),
        traj.times.iter().map(|&t| vec![x0 * (w * t).cos() + v0 / w * (w * t).sin(), 0.0, 0.0, 0.0]).collect(),
    );
    let phi = SlowObservable::linear("z", vec![0.5, 0.5, 0.0, 0.0]);
    let lifted = SlowObservable::component("z", 0);
    let flavor_z =
        trajectory(traj.times.clone(), traj.states.iter().map(|u| vec![phi.eval(u)[0], 0.0, 0.0, 0.0]).collect());
    let err = slow_error(&flavor_z, &exact, &lifted).unwrap();
    assert!(err < 1e-2, "{err}");
}

#[test]
fn slow_error_is_symmetric_across_grids() {
    let ta = grid(100, 0.02);
    let tb = grid(70, 2.0 / 70.0);
    let a = trajectory(ta.clone(), ta.iter().map(|t| vec![t.sin()]).collect());
    let b = trajectory(tb.clone(), tb.iter().map(|t| vec![(t + 0.01).sin()]).collect());
    let phi = SlowObservable::component("x", 0);
    assert_eq!(slow_error(&a, &b, &phi).unwrap(), slow_error(&b, &a, &phi).unwrap());
}

#[test]
fn energy_slope_of_exact_and_forward_euler_flows() {
    let b = linear_stability_problem(0.0).unwrap();
    let ham = b.model.hamiltonian().unwrap();
    let t = grid(1000, 0.01);
    // x oscillates, y drifts freely with zero momentum.
    let exact = trajectory(t.clone(), t.iter().map(|s| vec![s.cos(), 0.0, -s.sin(), 0.0]).collect());
    assert!(energy_series(&exact, ham).slope.abs() < 1e-12);

    let h = 0.01;
    let mut u = vec![1.0, 0.0, 0.0, 0.0];
    let mut states = vec![u.clone()];
    for _ in 0..1000 {
        u = vec![u[0] + h * u[2], u[1], u[2] - h * u[0], u[3]];
        states.push(u.clone());
    }
    let fe = energy_series(&trajectory(t, states), ham);
    assert!(fe.slope > 0.0);
}

#[test]
fn fpu_diagnostics_layout() {
    let t = grid(3, 1.0);
    let zero = trajectory(t.clone(), vec![vec![0.0; 12]; 4]);
    let d = fpu_diagnostics(&zero, 100.0, 3).unwrap();
    assert!(d.total.iter().chain(d.springs.iter().flatten()).all(|&x| x == 0.0));
    assert!(matches!(fpu_diagnostics(&zero, 100.0, 2), Err(FlavorError::LayoutMismatch(_))));
    // Single stretched spring: omega^2 dq^2 / 4.
    let mut u = vec![0.0; 12];
    u[3] = 0.01;
    let d = fpu_diagnostics(&trajectory(vec![0.0], vec![u]), 100.0, 3).unwrap();
    assert!((d.springs[1][0] - 0.25).abs() < 1e-12 && (d.total[0] - 0.25).abs() < 1e-12);
}

#[test]
fn crossings_and_periods() {
    let t = grid(10_000, 0.01);
    let x: Vec<f64> = t.iter().map(|s| (2.0 * std::f64::consts::PI * s / 7.0).sin()).collect();
    assert!((crossing_period(&t, &x, 0.0).unwrap() - 7.0).abs() < 1e-3);
    let p = dominant_period(&t, &x).unwrap();
    assert!((p - 7.0).abs() < 0.05, "{p}");
    assert_eq!(crossing_count(&[1.0, 0.0, -1.0, 0.0, 1.0], 0.0), 2);
}

#[test]
fn linear_fit_recovers_line() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
    let (s, i, r2) = linear_fit(&x, &y);
    assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
}

#[test]
fn convergence_table_fits_power_law() {
    let rows: Vec<ConvergenceRow> =
        [1.0, 0.5, 0.25, 0.125].iter().map(|&p| ConvergenceRow { param: p, error: 3.0 * p, mesosteps: 0 }).collect();
    let table = ConvergenceTable::from_rows(rows);
    assert!((table.slope - 1.0).abs() < 1e-12);
    assert!((table.spread() - 8.0).abs() < 1e-12);
}

#[test]
fn identical_ensemble_has_zero_variance() {
    let t = grid(10, 0.1);
    let one = trajectory(t.clone(), t.iter().map(|s| vec![s * s]).collect());
    let ens = vec![one.clone(); 5];
    let s = ensemble_stats(&ens, &SlowObservable::component("x", 0)).unwrap();
    assert!(s.variance.iter().all(|&v| v < 1e-24) && s.mean_se.iter().all(|&v| v < 1e-12));
    assert_eq!(s.variance[0], 0.0);
    for (m, u) in s.mean.iter().zip(&one.states) {
        assert!((m - u[0]).abs() < 1e-15);
    }
    let other = trajectory(grid(10, 0.2), vec![vec![0.0]; 11]);
    assert!(matches!(
        ensemble_stats(&[one.clone(), other], &SlowObservable::component("x", 0)),
        Err(FlavorError::GridMismatch)
    ));
    assert!(ensemble_stats(&[one], &SlowObservable::component("x", 0)).is_err());
}

#[test]
fn ou_autocorrelation_matches_closed_form() {
    let (c, var, h, steps, n) = (0.1, 2.0, 1.0, 30usize, 10_000u64);
    let ou = OuExactFlow::diagonal(vec![c], vec![var]).unwrap();
    let t = grid(steps, h);
    let ens: Vec<Trajectory> = (0..n)
        .map(|i| {
            let seed = trajectory_seed(42, i);
            let mut p = [0.0];
            fill_standard_normal(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed), &mut p);
            p[0] *= var.sqrt();
            let mut states = vec![vec![p[0]]];
            for k in 0..steps {
                ou.step_momenta(&mut p, h, 1.0, &mut mesostep_rng(seed, k as u64));
                states.push(vec![p[0]]);
            }
            trajectory(t.clone(), states)
        })
        .collect();
    let s = ensemble_stats(&ens, &SlowObservable::component("p", 0)).unwrap();
    for k in [0, 1, 5, 10, 20, 30] {
        let exact = var * (-c * t[k]).exp();
        assert!((s.autocorrelation[k] - exact).abs() <= 3.0 * s.autocorrelation_se[k], "k={k}");
    }
}

#[test]
fn ci_overlap_is_symmetric() {
    assert!(ci_overlap(0.0, 1.0, 3.0, 1.0));
    assert!(!ci_overlap(0.0, 0.1, 3.0, 0.1));
    assert_eq!(ci_overlap(1.0, 0.2, 1.9, 0.3), ci_overlap(1.9, 0.3, 1.0, 0.2));
}

#[test]
fn rotation_has_no_symplectic_defect() {
    assert!(symplectic_defect(&rotation(0.7)).unwrap() < 1e-15);
    assert!((conformal_defect(&(rotation(0.7) * 0.5), 0.25).unwrap()) < 1e-15);
    assert!(symplectic_defect(&DMatrix::identity(3, 3)).is_err());
    let jac = fd_jacobian(|u| Ok(vec![2.0 * u[0] + u[1], u[1] * u[1]]), &[1.0, 3.0], 1e-6).unwrap();
    assert!((jac - DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 6.0])).amax() < 1e-8);
}

proptest! {
    #[test]
    fn ensemble_stats_invariant_under_permutation(values in prop::collection::vec(-5.0f64..5.0, 6..20), shift in 1usize..5) {
        let t = grid(1, 1.0);
        let ens: Vec<Trajectory> = values.iter().map(|&v| trajectory(t.clone(), vec![vec![v], vec![v * v]])).collect();
        let mut rotated = ens.clone();
        rotated.rotate_left(shift % ens.len());
        let phi = SlowObservable::component("x", 0);
        let (a, b) = (ensemble_stats(&ens, &phi).unwrap(), ensemble_stats(&rotated, &phi).unwrap());
        for (x, y) in a.mean.iter().chain(&a.variance).zip(b.mean.iter().chain(&b.variance)) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn f_error_is_symmetric(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = grid(100, 0.01);
        let a = trajectory(t.clone(), (0..=100).map(|_| vec![rng.random_range(-1.0..1.0)]).collect());
        let b = trajectory(t, (0..=100).map(|_| vec![rng.random_range(-1.0..1.0)]).collect());
        let phi = SlowObservable::component("x", 0);
        prop_assert_eq!(f_error(&a, &b, &phi, 0.25).unwrap(), f_error(&b, &a, &phi, 0.25).unwrap());
    }
}
