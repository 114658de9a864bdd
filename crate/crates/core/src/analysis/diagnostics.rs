use crate::error::{FlavorError, Result};
use crate::flavor::Trajectory;
use crate::system::SeparatedHamiltonian;

/// Ordinary least-squares line through `(x, y)`: `(slope, intercept, r2)`.
/// `r2` is 1 for a perfect fit and for constant data.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len().min(y.len());
    if n < 2 {
        return (0.0, y.first().copied().unwrap_or(0.0), 1.0);
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Least-squares drift per unit time.
    pub slope: f64,
    /// `max - min` over the run.
    pub oscillation: f64,
}

/// `H(q, p)` along a trajectory and its linear trend.
pub fn energy_series(traj: &Trajectory, ham: &SeparatedHamiltonian) -> EnergySeries {
    let energy: Vec<f64> = traj.states.iter().map(|u| ham.energy_state(u)).collect();
    let (slope, _, _) = linear_fit(&traj.times, &energy);
    let (lo, hi) = energy.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    EnergySeries { times: traj.times.clone(), energy, slope, oscillation: if hi >= lo { hi - lo } else { 0.0 } }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpuDiagnostics {
    pub times: Vec<f64>,
    /// `springs[j][k]`: energy of stiff spring `j` at sample `k`.
    pub springs: Vec<Vec<f64>>,
    pub total: Vec<f64>,
}

impl FpuDiagnostics {
    /// Coefficient of variation (std / mean) of the total stiff energy.
    pub fn total_variation(&self) -> f64 {
        let n = self.total.len() as f64;
        let mean = self.total.iter().sum::<f64>() / n;
        let var = self.total.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean.abs()
    }
}

/// Stiff-spring energies `I_j = (p_{2j} - p_{2j-1})^2 / 4 + omega^2 (q_{2j} - q_{2j-1})^2 / 4`
/// of an FPU chain with `m` pairs, state `[q_1..q_2m, p_1..p_2m]`.
pub fn fpu_diagnostics(traj: &Trajectory, omega: f64, m: usize) -> Result<FpuDiagnostics> {
    let n = 2 * m;
    if m == 0 || traj.states.iter().any(|u| u.len() != 2 * n) {
        return Err(FlavorError::LayoutMismatch(format!("FPU diagnostics expect states of length {}", 2 * n)));
    }
    let w2 = omega * omega;
    let springs: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            traj.states
                .iter()
                .map(|u| {
                    let dq = u[2 * j + 1] - u[2 * j];
                    let dp = u[n + 2 * j + 1] - u[n + 2 * j];
                    0.25 * dp * dp + 0.25 * w2 * dq * dq
                })
                .collect()
        })
        .collect();
    let total = (0..traj.len()).map(|k| springs.iter().map(|s| s[k]).sum()).collect();
    Ok(FpuDiagnostics { times: traj.times.clone(), springs, total })
}

/// Number of sign changes of `series - level`, ignoring exact touches.
pub fn crossing_count(series: &[f64], level: f64) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &x in series {
        let s = x - level;
        if s != 0.0 {
            if last != 0.0 && s.signum() != last.signum() {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Times where `series` crosses `level`, linearly interpolated between samples.
pub fn crossing_times(times: &[f64], series: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &x) in times.iter().zip(series) {
        let s = x - level;
        if s == 0.0 {
            continue;
        }
        if let Some((t0, s0)) = last {
            if s0.signum() != s.signum() {
                out.push(t0 + (t - t0) * s0 / (s0 - s));
            }
        }
        last = Some((t, s));
    }
    out
}

/// Oscillation period from level crossings: twice the mean spacing
/// between consecutive crossings.
pub fn crossing_period(times: &[f64], series: &[f64], level: f64) -> Option<f64> {
    let c = crossing_times(times, series, level);
    (c.len() >= 2).then(|| 2.0 * (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

/// Dominant period of a uniformly sampled signal: the lag of the first
/// autocorrelation peak after its first zero that reaches 90% of the
/// largest such peak, searched up to half the record length and refined by
/// a parabola. Long records are decimated to at most 4096 points first.
pub fn dominant_period(times: &[f64], series: &[f64]) -> Option<f64> {
    let len = series.len().min(times.len());
    if len < 8 {
        return None;
    }
    let stride = len.div_ceil(4096);
    let x: Vec<f64> = series[..len].iter().step_by(stride).copied().collect();
    let n = x.len();
    let dt = (times[(n - 1) * stride] - times[0]) / (n - 1) as f64;
    let mean = x.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let acf = |lag: usize| x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n - lag) as f64;
    let max_lag = n / 2;
    let values: Vec<f64> = (0..=max_lag).map(acf).collect();
    let first_zero = values.iter().position(|&v| v <= 0.0)?;
    let peaks: Vec<usize> =
        (first_zero.max(1)..max_lag).filter(|&k| values[k] >= values[k - 1] && values[k] >= values[k + 1]).collect();
    let top = peaks.iter().map(|&k| values[k]).fold(f64::NEG_INFINITY, f64::max);
    let best = *peaks.iter().find(|&&k| values[k] > 0.0 && values[k] >= 0.9 * top)?;
    let (ym, y0, yp) = (values[best - 1], values[best], values[best + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom != 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
    Some((best as f64 + shift) * dt)
}
