//! Stability, accuracy and statistical diagnostics for FLAVOR runs.

mod accuracy;
mod convergence;
mod diagnostics;
mod stability;
mod stats;
mod structure;

pub use accuracy::{f_error, slow_error, window_means, MIN_WINDOW_SAMPLES};
pub use convergence::{
    convergence_study, dense_reference, fine_reference, omega_sweep, truncate, ConvergenceRow, ConvergenceTable, Sweep,
};
pub use diagnostics::{
    crossing_count, crossing_period, crossing_times, dominant_period, energy_series, fpu_diagnostics, linear_fit,
    EnergySeries, FpuDiagnostics,
};
pub use stability::{
    characteristic_polynomial, stability_domain_scan, stability_domain_scan_with_tol, stability_verdict,
    stability_verdict_with_tol, transfer_matrix, StabilityCell, StabilityGrid, StabilityVerdict, STABILITY_TOL,
};
pub use stats::{ci_overlap, ensemble_stats, EnsembleStats, Z95};
pub use structure::{
    conformal_defect, fd_jacobian, mesostep_jacobian, reversibility_defect, symplectic_defect, symplectic_form,
};

#[cfg(test)]
mod tests;
