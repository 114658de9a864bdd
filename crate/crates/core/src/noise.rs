//! Random streams for stochastic steppers.
//!
//! Every trajectory owns a 64-bit seed derived from the run's base seed and
//! the trajectory index. Each mesostep `k` then gets its own ChaCha8 stream
//! (`seed = trajectory seed`, `stream id = k`), so trajectories and
//! mesosteps never share generator state and ensembles can run in any order.
//! Gaussians use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type NoiseRng = ChaCha8Rng;

/// Seed of trajectory `index` in an ensemble started from `base_seed`.
///
/// Independent of the ensemble size, so growing `N` keeps earlier
/// trajectories unchanged.
pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Generator for mesostep `step` of the trajectory with seed `trajectory_seed`.
pub fn mesostep_rng(trajectory_seed: u64, step: u64) -> NoiseRng {
    let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed);
    rng.set_stream(step);
    rng
}

/// Fills `out` with independent standard normal draws.
#[inline]
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = trajectory_seed(7, 0);
        assert_eq!(a, trajectory_seed(7, 0));
        assert_ne!(a, trajectory_seed(7, 1));
        assert_ne!(a, trajectory_seed(8, 0));

        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        fill_standard_normal(&mut mesostep_rng(a, 3), &mut x);
        fill_standard_normal(&mut mesostep_rng(a, 3), &mut y);
        assert_eq!(x, y);
        fill_standard_normal(&mut mesostep_rng(a, 4), &mut y);
        assert_ne!(x, y);
    }

    #[test]
    fn standard_normal_moments() {
        let mut rng = mesostep_rng(1, 0);
        let n = 200_000;
        let mut buf = vec![0.0; n];
        fill_standard_normal(&mut rng, &mut buf);
        let mean = buf.iter().sum::<f64>() / n as f64;
        let var = buf.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // 5 standard errors
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }
}
