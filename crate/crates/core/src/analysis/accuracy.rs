use crate::error::{FlavorError, Result};
use crate::flavor::Trajectory;
use crate::system::SlowObservable;

/// Minimum samples per averaging window.
pub const MIN_WINDOW_SAMPLES: usize = 10;

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_horizons(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let (ta, tb) = (a.final_time(), b.final_time());
    if a.is_empty() || b.is_empty() || (ta - tb).abs() > 1e-9 * ta.abs().max(tb.abs()).max(1.0) {
        return Err(FlavorError::TimeGridMismatch(ta, tb));
    }
    Ok(ta.min(tb))
}

/// Number of whole windows of length `h` in `[0, t]`, tolerant to rounding.
fn window_count(t: f64, h: f64) -> usize {
    crate::flavor::mesostep_count(t, h) as usize
}

/// Time averages of `phi` over consecutive windows `[j h, (j+1) h)`,
/// treating the trajectory as piecewise constant between samples.
pub fn window_means(traj: &Trajectory, phi: &SlowObservable, h: f64, windows: usize) -> Result<Vec<Vec<f64>>> {
    if !(h > 0.0) {
        return Err(FlavorError::InvalidInput("window length must be positive".into()));
    }
    let values: Vec<Vec<f64>> = traj.states.iter().map(|u| phi.eval(u)).collect();
    let width = values.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; width]; windows];
    let mut counts = vec![0usize; windows];
    let snap = |t: f64| t / h + 1e-9;
    for (i, v) in values.iter().enumerate() {
        let w = snap(traj.times[i]).floor();
        if w >= 0.0 && (w as usize) < windows {
            counts[w as usize] += 1;
        }
        let start = traj.times[i];
        let end = traj.times.get(i + 1).copied().unwrap_or(start);
        // Spread the segment [start, end) over the windows it overlaps.
        let mut a = start;
        while a < end {
            let j = snap(a).floor();
            if j < 0.0 || j as usize >= windows {
                break;
            }
            let b = end.min((j + 1.0) * h);
            for (s, x) in sums[j as usize].iter_mut().zip(v) {
                *s += (b - a) * x;
            }
            if b <= a {
                break;
            }
            a = b;
        }
    }
    if let Some(j) = counts.iter().position(|&c| c < MIN_WINDOW_SAMPLES) {
        return Err(FlavorError::WindowTooSmall { window: h, samples: counts[j], required: MIN_WINDOW_SAMPLES });
    }
    Ok(sums.into_iter().map(|s| s.into_iter().map(|x| x / h).collect()).collect())
}

/// Largest discrepancy between window averages of `phi` along two
/// trajectories over a common horizon.
pub fn f_error(a: &Trajectory, b: &Trajectory, phi: &SlowObservable, window: f64) -> Result<f64> {
    let t = check_horizons(a, b)?;
    let n = window_count(t, window);
    if n == 0 {
        return Err(FlavorError::WindowTooSmall { window, samples: 0, required: MIN_WINDOW_SAMPLES });
    }
    let (ma, mb) = (window_means(a, phi, window, n)?, window_means(b, phi, window, n)?);
    Ok(ma.iter().zip(&mb).map(|(x, y)| norm_diff(x, y)).fold(0.0, f64::max))
}

/// Piecewise-linear interpolation of observable values at `t`.
fn interpolate(times: &[f64], values: &[Vec<f64>], t: f64) -> Vec<f64> {
    let i = times.partition_point(|&s| s <= t);
    if i == 0 {
        return values[0].clone();
    }
    if i >= times.len() {
        return values[times.len() - 1].clone();
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[i - 1].iter().zip(&values[i]).map(|(x, y)| x + w * (y - x)).collect()
}

/// Sup-norm distance between the slow observables of two trajectories,
/// each sampled at its own times and compared with the other interpolated
/// piecewise linearly. Symmetric in its arguments.
pub fn slow_error(a: &Trajectory, b: &Trajectory, phi: &SlowObservable) -> Result<f64> {
    check_horizons(a, b)?;
    let va: Vec<Vec<f64>> = a.states.iter().map(|u| phi.eval(u)).collect();
    let vb: Vec<Vec<f64>> = b.states.iter().map(|u| phi.eval(u)).collect();
    let one_way = |ta: &[f64], xa: &[Vec<f64>], tb: &[f64], xb: &[Vec<f64>]| {
        ta.iter().zip(xa).map(|(&t, x)| norm_diff(x, &interpolate(tb, xb, t))).fold(0.0, f64::max)
    };
    Ok(one_way(&a.times, &va, &b.times, &vb).max(one_way(&b.times, &vb, &a.times, &va)))
}
