use std::path::PathBuf;

use flavors::FlavorError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("unknown benchmark {name:?}{}", .suggestion.as_ref().map(|s| format!("; did you mean {s:?}?")).unwrap_or_default())]
    UnknownBenchmark { name: String, suggestion: Option<String> },

    #[error(transparent)]
    Flavor(#[from] FlavorError),

    /// A run stopped early; partial outputs were written.
    #[error("integration failed: {0}")]
    Integration(FlavorError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Machine-readable form of an error, as printed to stderr and stored in manifests.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Format { path: path.into(), message: message.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "Config",
            Self::UnknownBenchmark { .. } => "UnknownBenchmark",
            Self::Flavor(e) | Self::Integration(e) => e.kind(),
            Self::Io { .. } => "Io",
            Self::Format { .. } => "Format",
        }
    }

    /// 2 for invalid configuration, 3 for failed integrations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::UnknownBenchmark { .. } | Self::Format { .. } => 2,
            Self::Flavor(e) => match e {
                FlavorError::NonFiniteState { .. } => 3,
                _ => 2,
            },
            Self::Integration(_) => 3,
            Self::Io { .. } => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let suggestion = match self {
            Self::UnknownBenchmark { suggestion, .. } => suggestion.clone(),
            _ => None,
        };
        ErrorReport { kind: self.kind().into(), message: self.to_string(), suggestion }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
