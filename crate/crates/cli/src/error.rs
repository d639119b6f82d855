use std::path::Path;

use flowergm::io::Issue;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] flowergm::Error),
    #[error("input validation failed with {} issue(s)", .0.len())]
    Invalid(Vec<Issue>),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use flowergm::Error as E;
        match self {
            CliError::Invalid(_) => "E_VALIDATION",
            CliError::Usage(_) => "E_USAGE",
            CliError::Io { .. } => "E_IO",
            CliError::Json(_) => "E_JSON",
            CliError::Model(e) => match e {
                E::Collinear { .. } => "E_COLLINEAR",
                E::UnknownCovariate(_) => "E_UNKNOWN_COVARIATE",
                E::InvalidModel(_) => "E_INVALID_MODEL",
                E::MissingCoefficient(_) => "E_MISSING_COEFFICIENT",
                E::NonFinite { .. } => "E_NON_FINITE",
                E::GroupMismatch(_) => "E_GROUP_MISMATCH",
                E::ZeroWeights(_) => "E_ZERO_WEIGHTS",
                E::Unassigned(_) => "E_UNASSIGNED",
                E::Config(_) => "E_CONFIG",
                E::Io(_) => "E_IO",
                E::Csv(_) => "E_CSV",
                _ => "E_MODEL",
            },
        }
    }

    /// Exit status: 2 for bad input or usage, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn record(&self, command: &str) -> ErrorRecord {
        let issues = match self {
            CliError::Invalid(v) => v.clone(),
            _ => Vec::new(),
        };
        ErrorRecord { status: "error", command: command.to_string(), code: self.code(), message: self.to_string(), issues }
    }
}

/// Error report written to stderr and `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub command: String,
    pub code: &'static str,
    pub message: String,
    pub issues: Vec<Issue>,
}
