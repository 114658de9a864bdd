use crate::error::{FlavorError, Result};
use crate::flavor::Trajectory;
use crate::system::SlowObservable;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Pointwise ensemble moments of a scalar observable, each with its
/// standard error `sample_std / sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub n: usize,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub variance: Vec<f64>,
    pub variance_se: Vec<f64>,
    /// `E[phi(t) phi(0)]`, no mean subtraction.
    pub autocorrelation: Vec<f64>,
    pub autocorrelation_se: Vec<f64>,
}

impl EnsembleStats {
    /// 95% confidence interval of the mean at sample `k`.
    pub fn mean_ci(&self, k: usize) -> (f64, f64) {
        (self.mean[k] - Z95 * self.mean_se[k], self.mean[k] + Z95 * self.mean_se[k])
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Statistics of the first component of `phi` over an ensemble sharing
/// one sample grid.
pub fn ensemble_stats(trajectories: &[Trajectory], phi: &SlowObservable) -> Result<EnsembleStats> {
    if trajectories.len() < 2 {
        return Err(FlavorError::InvalidInput("ensemble statistics need at least two trajectories".into()));
    }
    let times = trajectories[0].times.clone();
    if trajectories.iter().any(|t| t.times != times) {
        return Err(FlavorError::GridMismatch);
    }
    let n = trajectories.len();
    let values: Vec<Vec<f64>> =
        trajectories.iter().map(|t| t.states.iter().map(|u| phi.eval(u)[0]).collect()).collect();
    let k_max = times.len();
    let mut out = EnsembleStats {
        times,
        n,
        mean: Vec::with_capacity(k_max),
        mean_se: Vec::with_capacity(k_max),
        variance: Vec::with_capacity(k_max),
        variance_se: Vec::with_capacity(k_max),
        autocorrelation: Vec::with_capacity(k_max),
        autocorrelation_se: Vec::with_capacity(k_max),
    };
    let mut column = vec![0.0; n];
    for k in 0..k_max {
        for (c, v) in column.iter_mut().zip(&values) {
            *c = v[k];
        }
        let (mean, se) = mean_and_se(&column);
        let sq: Vec<f64> = column.iter().map(|x| (x - mean).powi(2)).collect();
        let (_, var_se) = mean_and_se(&sq);
        let variance = sq.iter().sum::<f64>() / (n as f64 - 1.0);
        let prod: Vec<f64> = values.iter().map(|v| v[k] * v[0]).collect();
        let (ac, ac_se) = mean_and_se(&prod);
        out.mean.push(mean);
        out.mean_se.push(se);
        out.variance.push(variance);
        out.variance_se.push(var_se);
        out.autocorrelation.push(ac);
        out.autocorrelation_se.push(ac_se);
    }
    Ok(out)
}

/// True if the 95% intervals `m1 +- z se1` and `m2 +- z se2` intersect.
pub fn ci_overlap(m1: f64, se1: f64, m2: f64, se2: f64) -> bool {
    (m1 - m2).abs() <= Z95 * (se1 + se2)
}
