//! Fermi–Pasta–Ulam chain: `2m` unit masses, stiff harmonic springs
//! inside each pair and soft quartic springs between pairs and to the
//! walls. `H = |p|^2/2 + (omega^2/4) sum (q_{2i} - q_{2i-1})^2 + sum (q_{2i+1} - q_{2i})^4`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{hamiltonian_labels, Benchmark, Method, Model, Reference};
use crate::error::{FlavorError, Result};
use crate::flavor::ConstraintSpec;
use crate::legacy::HarmonicPairFlow;
use crate::system::{MassMatrix, SeparatedHamiltonian, SlowObservable, StepSchedule};

/// Soft spring law between neighbouring pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SoftLaw {
    Quartic,
    /// `d^2`, which makes the whole chain linear.
    Quadratic,
}

impl SoftLaw {
    fn energy(self, d: f64) -> f64 {
        match self {
            Self::Quartic => d.powi(4),
            Self::Quadratic => d * d,
        }
    }
    fn force(self, d: f64) -> f64 {
        match self {
            Self::Quartic => 4.0 * d.powi(3),
            Self::Quadratic => 2.0 * d,
        }
    }
}

/// Soft spring `i` (0..=m) joins coordinate `2i - 1` to `2i` (0-based),
/// with out-of-range coordinates pinned at zero.
fn soft_springs(n: usize, q: &[f64]) -> impl Iterator<Item = (Option<usize>, Option<usize>, f64)> + '_ {
    let m = n / 2;
    (0..=m).map(move |i| {
        let left = (i > 0).then(|| 2 * i - 1);
        let right = (i < m).then_some(2 * i);
        let d = right.map_or(0.0, |r| q[r]) - left.map_or(0.0, |l| q[l]);
        (left, right, d)
    })
}

fn build(m: usize, omega: f64, law: SoftLaw) -> Result<SeparatedHamiltonian> {
    if m == 0 {
        return Err(FlavorError::InvalidInput("FPU chain needs at least one pair".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(FlavorError::InvalidInput("omega must be positive".into()));
    }
    let n = 2 * m;
    let eps = 1.0 / (omega * omega);
    let pairs = (0..m).map(|j| (2 * j, 2 * j + 1, 0.5)).collect();
    Ok(SeparatedHamiltonian::new(
        MassMatrix::identity(n),
        Arc::new(move |q: &[f64]| soft_springs(n, q).map(|(_, _, d)| law.energy(d)).sum()),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            o.fill(0.0);
            for (l, r, d) in soft_springs(n, q) {
                let f = law.force(d);
                if let Some(l) = l {
                    o[l] -= f;
                }
                if let Some(r) = r {
                    o[r] += f;
                }
            }
        }),
        Arc::new(move |q: &[f64]| 0.25 * (0..m).map(|j| (q[2 * j + 1] - q[2 * j]).powi(2)).sum::<f64>()),
        Arc::new(move |q: &[f64], o: &mut [f64]| {
            for j in 0..m {
                let d = 0.5 * (q[2 * j + 1] - q[2 * j]);
                o[2 * j] = -d;
                o[2 * j + 1] = d;
            }
        }),
        eps,
    )?
    .with_exact_fast_flow(Arc::new(HarmonicPairFlow::new(vec![1.0; n], pairs)?)))
}

fn labels(m: usize) -> Vec<String> {
    let names: Vec<String> = (1..=2 * m).map(|i| format!("x{i}")).collect();
    hamiltonian_labels(&names.iter().map(String::as_str).collect::<Vec<_>>())
}

fn freeze_rows(m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, 2 * m);
    for j in 0..m {
        a[(j, 2 * j)] = -1.0;
        a[(j, 2 * j + 1)] = 1.0;
    }
    a
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    name: &str,
    anchor: &str,
    m: usize,
    omega: f64,
    law: SoftLaw,
    q0: Vec<f64>,
    horizon: f64,
    schedule: StepSchedule,
    reference: Reference,
    default_method: Method,
) -> Result<Benchmark> {
    let n = 2 * m;
    if q0.len() != n {
        return Err(FlavorError::LayoutMismatch(format!("FPU initial positions need length {n}")));
    }
    let ham = build(m, omega, law)?;
    let eps = ham.epsilon();
    let mut u0 = q0;
    u0.resize(2 * n, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut fast = vec![0.0; 2 * n];
    fast[0] = -1.0;
    fast[1] = 1.0;
    Ok(Benchmark {
        name: name.into(),
        anchor: anchor.into(),
        model: Model::Hamiltonian(Arc::new(ham)),
        default_schedule: schedule,
        default_method,
        initial_state: u0,
        horizon,
        ensemble_size: 1,
        state_labels: labels(m),
        slow_observables: vec![
            SlowObservable::new("pair1", move |u: &[f64]| vec![s * (u[0] + u[1])]).with_lipschitz(1.0)
        ],
        fast_observables: vec![SlowObservable::linear("spring1", fast)],
        reference,
        constraints: Some(ConstraintSpec::LinearFreeze(freeze_rows(m))),
        params: vec![("m".into(), m as f64), ("omega".into(), omega), ("epsilon".into(), eps)],
        default_stride: 10,
    })
}

/// Generic quartic FPU chain with `m` pairs, the first stiff spring
/// stretched by `1/omega`, `delta = 0.002`, `tau = 0.1/omega`, horizon `2 omega`.
pub fn fpu_problem(m: usize, omega: f64) -> Result<Benchmark> {
    let mut q0 = vec![0.0; 2 * m];
    if m > 0 {
        q0[0] = 1.0;
        q0[1] = 1.0 + 1.0 / omega;
    }
    assemble(
        "fpu",
        "Fermi-Pasta-Ulam chain of alternating stiff harmonic and soft quartic springs",
        m,
        omega,
        SoftLaw::Quartic,
        q0,
        2.0 * omega,
        StepSchedule::new(0.1 / omega, 0.002)?,
        Reference::Fine { method: Method::Fine, h: 0.05 / omega },
        Method::Flavor,
    )
}

/// Three pairs, `omega = 1000`, over `2 omega` time units.
pub fn fpu_short_problem() -> Result<Benchmark> {
    assemble(
        "fpu-short",
        "FPU chain on the intermediate time scale where stiff springs exchange energy",
        3,
        1e3,
        SoftLaw::Quartic,
        vec![0.4642, -0.4202, 0.0344, 0.1371, 0.0626, 0.0810],
        2e3,
        StepSchedule::new(1e-4, 0.002)?,
        Reference::Fine { method: Method::Fine, h: 5e-5 },
        Method::Flavor,
    )
}

/// Three pairs, `omega = 200`, over `omega^2/4` time units.
pub fn fpu_long_problem() -> Result<Benchmark> {
    let omega: f64 = 200.0;
    assemble(
        "fpu-long",
        "FPU chain over the long time scale of nonlinear energy exchange",
        3,
        omega,
        SoftLaw::Quartic,
        vec![1.0, 0.0, 0.0, 1.0 / omega, 0.0, 0.0],
        omega * omega / 4.0,
        StepSchedule::new(5e-4, 0.002)?,
        Reference::Fine { method: Method::VelocityVerlet, h: 1e-5 },
        Method::Flavor,
    )
}

/// Linear chain (quadratic soft springs) with `m` pairs; the first stiff
/// spring starts stretched by `1/omega`; the horizon covers three beat periods.
pub fn fpu_harmonic_problem(m: usize, omega: f64) -> Result<Benchmark> {
    let beat = if m > 1 { harmonic_fpu_beat_period(m, omega)? } else { 100.0 };
    let mut q0 = vec![0.0; 2 * m];
    if m > 0 {
        q0[1] = 1.0 / omega;
    }
    assemble(
        "fpu-harmonic",
        "FPU chain with quadratic soft springs; stiff-spring energy exchange has a closed-form period",
        m,
        omega,
        SoftLaw::Quadratic,
        q0,
        3.0 * beat,
        StepSchedule::new(0.1 / omega, 0.01)?,
        Reference::Fine { method: Method::Fine, h: 0.05 / omega },
        Method::Flavor,
    )
}

/// Energy-exchange period of the stiff springs in the linear chain.
///
/// The `m` high normal-mode frequencies cluster near `omega`; the energy
/// of each stiff spring is a sum of beats at their pairwise differences.
/// The chain's tridiagonal coupling makes these differences (nearly)
/// integer multiples of the smallest gap, so the pattern repeats after
/// `2 pi / gap`.
pub fn harmonic_fpu_beat_period(m: usize, omega: f64) -> Result<f64> {
    if m < 2 {
        return Err(FlavorError::InvalidInput("a beat needs at least two pairs".into()));
    }
    let ham = build(m, omega, SoftLaw::Quadratic)?;
    let n = 2 * m;
    // Hessian of V + U/eps by exact differencing of the linear gradients.
    let mut k = DMatrix::zeros(n, n);
    let (mut gv, mut gu) = (vec![0.0; n], vec![0.0; n]);
    let alpha = 1.0 / ham.epsilon();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        ham.soft_gradient(&e, &mut gv);
        ham.stiff_gradient(&e, &mut gu);
        for i in 0..n {
            k[(i, j)] = gv[i] + alpha * gu[i];
        }
    }
    let eig = SymmetricEigen::try_new(k, 1e-14, 10_000).ok_or(FlavorError::EigenFailure)?;
    let mut freqs: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    freqs.sort_by(f64::total_cmp);
    let high = &freqs[m..];
    let gap = high.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(FlavorError::EigenFailure);
    }
    Ok(2.0 * std::f64::consts::PI / gap)
}
