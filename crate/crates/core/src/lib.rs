//! Flow-averaging integrators (FLAVORs) for stiff multiscale dynamics.
//!
//! A FLAVOR wraps an existing single-scale integrator whose stiff terms can
//! be switched on and off. Each mesostep `delta` runs the integrator with the
//! stiff part on for a microstep `tau` and off for the remaining
//! `delta - tau`. Slow variables are captured strongly and fast ones in the
//! sense of time averages, at a cost that does not grow with the stiffness.
//!
//! Modules:
//! - [`system`]: problem descriptions (split vector fields, Hamiltonians, SDEs, Langevin systems).
//! - [`legacy`]: single-scale one-step maps with a stiffness switch.
//! - [`flavor`]: FLAVOR compositions and the trajectory driver.
//! - [`analysis`]: stability, error and ensemble diagnostics.
//! - [`problems`]: bundled benchmark systems.

pub mod analysis;
pub mod error;
pub mod flavor;
pub mod legacy;
pub mod noise;
pub mod problems;
pub mod system;

pub use error::{FlavorError, Result};
