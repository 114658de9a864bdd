//! Deterministic Hamiltonian benchmarks: spring chains and small molecules.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{hamiltonian_labels, Benchmark, Method, Model, Reference};
use crate::error::{FlavorError, Result};
use crate::flavor::{ConstrainedFlight, ConstraintSpec};
use crate::system::{MassMatrix, SeparatedHamiltonian, SlowObservable, StepSchedule};

/// Three unit masses, quartic soft potential `x^4`, stiff springs
/// `(w1/2)(y-x)^2 + (w2/2)(z-y)^2` scaled by `1/eps`.
pub fn triple_chain_problem() -> Result<Benchmark> {
    triple_chain_with_omega(1e3)
}

/// Triple chain with `eps = omega^{-2}`; the bundled default is `omega = 1000`.
pub fn triple_chain_with_omega(omega: f64) -> Result<Benchmark> {
    let (w1, w2) = (1.1, 0.97);
    let eps = 1.0 / (omega * omega);
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(3),
        Arc::new(|q: &[f64]| q[0].powi(4)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            o[0] = 4.0 * q[0].powi(3);
            o[1] = 0.0;
            o[2] = 0.0;
        }),
        Arc::new(move |q: &[f64]| 0.5 * w1 * (q[1] - q[0]).powi(2) + 0.5 * w2 * (q[2] - q[1]).powi(2)),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            let a = w1 * (q[1] - q[0]);
            let b = w2 * (q[2] - q[1]);
            o[0] = -a;
            o[1] = a - b;
            o[2] = b;
        }),
        eps,
    )?;
    Ok(Benchmark {
        name: "triple-chain".into(),
        anchor: "Three-mass chain, quartic soft potential and two stiff harmonic springs".into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: StepSchedule::new(5e-4, 0.01)?,
        // The nonintrusive kind needs tau * delta / eps below ~1 here.
        default_method: Method::Artificial,
        initial_state: vec![0.8, 0.811, 0.721, 0.0, 0.0, 0.0],
        horizon: 50.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["x", "y", "z"]),
        slow_observables: vec![
            SlowObservable::linear("slow", vec![1.0 / 3.0; 3]),
            SlowObservable::new("q", |u: &[f64]| u[..3].to_vec()).with_lipschitz(1.0),
        ],
        fast_observables: vec![SlowObservable::new("fast", |u: &[f64]| vec![u[1] - u[0], u[2] - u[1]])],
        reference: Reference::Fine { method: Method::Fine, h: 5e-4 },
        constraints: Some(ConstraintSpec::LinearFreeze(DMatrix::from_row_slice(
            2,
            3,
            &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0],
        ))),
        params: vec![("epsilon".into(), eps), ("omega1".into(), w1), ("omega2".into(), w2)],
        default_stride: 10,
    })
}

/// `H = (p_y^2 + p_x^2)/2 + y^6/eps + (x - y)^4`, state `[y, x, p_y, p_x]`.
pub fn nonlinear_stiff_soft_problem() -> Result<Benchmark> {
    let eps = 1e-6;
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(2),
        Arc::new(|q: &[f64]| (q[1] - q[0]).powi(4)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            let d = 4.0 * (q[1] - q[0]).powi(3);
            o[0] = -d;
            o[1] = d;
        }),
        Arc::new(|q: &[f64]| q[0].powi(6)),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            o[0] = 6.0 * q[0].powi(5);
            o[1] = 0.0;
        }),
        eps,
    )?;
    Ok(Benchmark {
        name: "nonlinear-stiff-soft".into(),
        anchor: "Two degrees of freedom with nonlinear stiff (y^6) and soft ((x-y)^4) potentials".into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: StepSchedule::new(1e-5, 1e-3)?,
        default_method: Method::Flavor,
        initial_state: vec![1.1, 2.2, 0.0, 0.0],
        horizon: 2.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["y", "x"]),
        slow_observables: vec![SlowObservable::linear("x-y", vec![-1.0, 1.0, 0.0, 0.0])],
        fast_observables: vec![SlowObservable::component("y", 0)],
        reference: Reference::Fine { method: Method::Fine, h: 1e-5 },
        constraints: Some(ConstraintSpec::LinearFreeze(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]))),
        params: vec![("epsilon".into(), eps)],
        default_stride: 1,
    })
}

/// Frozen-radius flight for the hinge problem: the radius and radial
/// momentum stay fixed and the particle turns at its current angular
/// velocity, position and momentum rotating together.
struct CircularFlight;

impl ConstrainedFlight for CircularFlight {
    fn flight(&self, u: &mut [f64], h: f64) {
        let (x, y, px, py) = (u[0], u[1], u[2], u[3]);
        let r2 = x * x + y * y;
        let angle = h * (x * py - y * px) / r2;
        let (s, c) = angle.sin_cos();
        u[0] = c * x - s * y;
        u[1] = s * x + c * y;
        u[2] = c * px - s * py;
        u[3] = s * px + c * py;
    }
}

/// Particle on a stiff spring to a fixed hinge at the origin:
/// `H = |p|^2/2 + (omega^2/2)(r - r0)^2 + x^2/r^2`, `r0 = 1`.
pub fn primitive_md_problem() -> Result<Benchmark> {
    primitive_md_with_initial(1.1, 0.8)
}

/// Same system from position `(x0, y0)` at rest. The hinge itself is singular.
pub fn primitive_md_with_initial(x0: f64, y0: f64) -> Result<Benchmark> {
    if x0 == 0.0 && y0 == 0.0 {
        return Err(FlavorError::InvalidInput("initial position coincides with the hinge".into()));
    }
    let omega: f64 = 500.0;
    let r0 = 1.0;
    let eps = 1.0 / (omega * omega);
    let ham = SeparatedHamiltonian::new(
        MassMatrix::identity(2),
        Arc::new(|q: &[f64]| q[0] * q[0] / (q[0] * q[0] + q[1] * q[1])),
        Arc::new(|q: &[f64], o: &mut [f64]| {
            let (x, y) = (q[0], q[1]);
            let r2 = x * x + y * y;
            let r4 = r2 * r2;
            o[0] = 2.0 * x * y * y / r4;
            o[1] = -2.0 * x * x * y / r4;
        }),
        Arc::new(move |q: &[f64]| 0.5 * ((q[0] * q[0] + q[1] * q[1]).sqrt() - r0).powi(2)),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
            let f = (r - r0) / r;
            o[0] = f * q[0];
            o[1] = f * q[1];
        }),
        eps,
    )?;
    Ok(Benchmark {
        name: "primitive-md".into(),
        anchor: "Particle tied by a stiff spring to a fixed hinge, soft angular potential".into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: StepSchedule::new(2e-4, 0.01)?,
        default_method: Method::Flavor,
        initial_state: vec![x0, y0, 0.0, 0.0],
        horizon: 100.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["x", "y"]),
        slow_observables: vec![SlowObservable::new("angle", |u: &[f64]| vec![u[1].atan2(u[0])])],
        fast_observables: vec![SlowObservable::new("radius", |u: &[f64]| vec![u[0].hypot(u[1])])],
        reference: Reference::Fine { method: Method::Fine, h: 2e-4 },
        constraints: Some(ConstraintSpec::Custom(Arc::new(CircularFlight))),
        params: vec![("omega".into(), omega), ("r0".into(), r0), ("epsilon".into(), eps)],
        default_stride: 10,
    })
}

fn bond_vectors(q: &[f64]) -> ([f64; 2], [f64; 2]) {
    ([q[0] - q[2], q[1] - q[3]], [q[4] - q[2], q[5] - q[3]])
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// United-atom propane in the plane: two stiff bonds and a soft bending
/// term `K_theta/2 (cos theta - cos theta0)^2`. The bond constant sets
/// `eps = 1/K_r`, so `U = 1/2 sum (r_i - r0)^2`.
pub fn propane_problem() -> Result<Benchmark> {
    let (kr, ktheta, r0) = (8370.0, 4.31, 1.53);
    let theta0 = 109.5_f64.to_radians();
    let c0 = theta0.cos();
    let eps = 1.0 / kr;
    let angle_pot = move |q: &[f64]| {
        let (a, b) = bond_vectors(q);
        let c = (a[0] * b[0] + a[1] * b[1]) / (norm2(a) * norm2(b));
        0.5 * ktheta * (c - c0).powi(2)
    };
    let ham = SeparatedHamiltonian::new(
        MassMatrix::diagonal(vec![15.0, 15.0, 14.0, 14.0, 15.0, 15.0])?,
        Arc::new(angle_pot),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            let (a, b) = bond_vectors(q);
            let (la, lb) = (norm2(a), norm2(b));
            let c = (a[0] * b[0] + a[1] * b[1]) / (la * lb);
            let pre = ktheta * (c - c0);
            // d cos / d a = b/(|a||b|) - cos a/|a|^2
            let da = [b[0] / (la * lb) - c * a[0] / (la * la), b[1] / (la * lb) - c * a[1] / (la * la)];
            let db = [a[0] / (la * lb) - c * b[0] / (lb * lb), a[1] / (la * lb) - c * b[1] / (lb * lb)];
            o[0] = pre * da[0];
            o[1] = pre * da[1];
            o[4] = pre * db[0];
            o[5] = pre * db[1];
            o[2] = -o[0] - o[4];
            o[3] = -o[1] - o[5];
        }),
        Arc::new(move |q: &[f64]| {
            let (a, b) = bond_vectors(q);
            0.5 * ((norm2(a) - r0).powi(2) + (norm2(b) - r0).powi(2))
        }),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            let (a, b) = bond_vectors(q);
            let (la, lb) = (norm2(a), norm2(b));
            let (fa, fb) = ((la - r0) / la, (lb - r0) / lb);
            o[0] = fa * a[0];
            o[1] = fa * a[1];
            o[4] = fb * b[0];
            o[5] = fb * b[1];
            o[2] = -o[0] - o[4];
            o[3] = -o[1] - o[5];
        }),
        eps,
    )?;
    let mut u0 = vec![0.0, 0.0, 1.533, 0.0, 2.6136, 1.0826];
    u0.extend_from_slice(&[-0.4326, -1.6656, 0.1253, 0.2877, -1.1465, 1.1909]);
    Ok(Benchmark {
        name: "propane".into(),
        anchor: "Planar united-atom propane with exaggerated bond and angle constants".into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: StepSchedule::new(0.01, 0.1)?,
        default_method: Method::Flavor,
        initial_state: u0,
        horizon: 100.0,
        ensemble_size: 1,
        state_labels: hamiltonian_labels(&["x1", "y1", "x2", "y2", "x3", "y3"]),
        slow_observables: vec![SlowObservable::new("angle", |u: &[f64]| {
            let (a, b) = bond_vectors(u);
            vec![((a[0] * b[0] + a[1] * b[1]) / (norm2(a) * norm2(b))).clamp(-1.0, 1.0).acos()]
        })],
        fast_observables: vec![SlowObservable::new("bonds", |u: &[f64]| {
            let (a, b) = bond_vectors(u);
            vec![norm2(a), norm2(b)]
        })],
        reference: Reference::Fine { method: Method::Fine, h: 0.01 },
        constraints: None,
        params: vec![("K_r".into(), kr), ("K_theta".into(), ktheta), ("r0".into(), r0), ("theta0_deg".into(), 109.5)],
        default_stride: 1,
    })
}
