use thiserror::Error;

/// Errors raised by systems, integrators and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlavorError {
    #[error("non-finite state produced{}", match .step { Some(k) => format!(" at mesostep {k}"), None => String::new() })]
    NonFiniteState { step: Option<u64> },

    #[error("schedule infeasible: epsilon^{exponent} = {scale} is not below gamma = {gamma}")]
    ScheduleInfeasible { scale: f64, gamma: f64, exponent: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("matrix decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("no closed-form fast flow registered for this system")]
    NoExactFastFlow,

    #[error("legacy map has no adjoint")]
    AdjointMissing,

    #[error("constraint rows are linearly dependent")]
    ConstraintRankDeficient,

    #[error("stepper is not linear in the state")]
    NotLinear,

    #[error("eigenvalue computation failed")]
    EigenFailure,

    #[error("averaging window {window} holds only {samples} samples (need at least {required})")]
    WindowTooSmall { window: f64, samples: usize, required: usize },

    #[error("trajectory horizons differ: {0} vs {1}")]
    TimeGridMismatch(f64, f64),

    #[error("trajectories are not sampled on a common grid")]
    GridMismatch,

    #[error("state layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = FlavorError> = std::result::Result<T, E>;

impl FlavorError {
    /// Stable variant name, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonFiniteState { .. } => "NonFiniteState",
            Self::ScheduleInfeasible { .. } => "ScheduleInfeasible",
            Self::InvalidSchedule(_) => "InvalidSchedule",
            Self::DecompositionFailure(_) => "DecompositionFailure",
            Self::NoExactFastFlow => "NoExactFastFlow",
            Self::AdjointMissing => "AdjointMissing",
            Self::ConstraintRankDeficient => "ConstraintRankDeficient",
            Self::NotLinear => "NotLinear",
            Self::EigenFailure => "EigenFailure",
            Self::WindowTooSmall { .. } => "WindowTooSmall",
            Self::TimeGridMismatch(..) => "TimeGridMismatch",
            Self::GridMismatch => "GridMismatch",
            Self::LayoutMismatch(_) => "LayoutMismatch",
            Self::InvalidInput(_) => "InvalidInput",
        }
    }
}
