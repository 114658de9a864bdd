//! Single-scale one-step maps `Phi^alpha_h` with an externally controlled
//! stiffness parameter `alpha`. These are the building blocks a FLAVOR
//! switches on and off.
//!
//! All maps update the state in place. A zero step leaves the state
//! untouched bitwise, and stochastic maps consume no random numbers for it.

mod hamiltonian;
mod ode;
mod stochastic;

use std::sync::Arc;

pub use hamiltonian::{
    FastFlowKind, ForcedSymplecticEuler, HarmonicPairFlow, ImpulseMethod, SoftKick, SymplecticEuler,
    SymplecticEulerAdjoint, VelocityVerlet,
};
pub use ode::ForwardEuler;
pub use stochastic::{EulerMaruyama, Gla, OuExactFlow};

use crate::error::{FlavorError, Result};
use crate::noise::NoiseRng;

/// Scratch buffer for per-step temporaries.
pub(crate) type Scratch = smallvec::SmallVec<[f64; 16]>;

pub(crate) fn scratch(n: usize) -> Scratch {
    smallvec::smallvec![0.0; n]
}

/// Deterministic one-step map.
pub trait OneStepMap: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;

    /// Advances `u` by `h` with stiffness `alpha`, starting at time `t`.
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64) -> Result<()>;

    /// `Phi*_h = (Phi_{-h})^{-1}`, when the map knows it.
    fn adjoint(&self) -> Option<Arc<dyn OneStepMap>> {
        None
    }

    fn adjoint_available(&self) -> bool {
        self.adjoint().is_some()
    }

    /// Out-of-place convenience wrapper around [`OneStepMap::step`].
    fn apply(&self, u: &[f64], h: f64, alpha: f64, t: f64) -> Result<Vec<f64>> {
        let mut v = u.to_vec();
        self.step(&mut v, h, alpha, t)?;
        Ok(v)
    }
}

/// One-step map driven by Gaussian noise drawn from a caller-owned stream.
pub trait StochasticOneStepMap: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// Number of standard normals consumed by one nonzero step.
    fn noise_dim(&self) -> usize;

    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64, rng: &mut NoiseRng) -> Result<()>;

    fn apply(&self, u: &[f64], h: f64, alpha: f64, t: f64, rng: &mut NoiseRng) -> Result<Vec<f64>> {
        let mut v = u.to_vec();
        self.step(&mut v, h, alpha, t, rng)?;
        Ok(v)
    }
}

#[inline]
pub(crate) fn ensure_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(FlavorError::NonFiniteState { step: None })
    }
}

#[inline]
pub(crate) fn check_len(u: &[f64], dim: usize) -> Result<()> {
    if u.len() == dim {
        Ok(())
    } else {
        Err(FlavorError::LayoutMismatch(format!("state has length {}, expected {dim}", u.len())))
    }
}
