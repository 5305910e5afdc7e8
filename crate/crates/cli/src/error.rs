use std::process::ExitCode;

use qgpe::QgpeError;
use thiserror::Error;

/// Failures surfaced by the driver, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or inconsistent configuration; exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Unreadable or malformed input file; exit code 3.
    #[error("file format error: {0}")]
    Format(String),

    /// Solver breakdown or dense size cap; exit code 4.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Anything else (filesystem, child processes); exit code 1.
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Format(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }
}

impl From<QgpeError> for CliError {
    fn from(e: QgpeError) -> Self {
        let msg = e.to_string();
        match e {
            QgpeError::Argument(_) | QgpeError::Domain(_) | QgpeError::GridMismatch(_) => CliError::Config(msg),
            QgpeError::Format(_) | QgpeError::Json(_) | QgpeError::Csv(_) => CliError::Format(msg),
            QgpeError::SizeCap { .. } | QgpeError::Krylov { .. } | QgpeError::Collapse(_) | QgpeError::Linalg(_) => {
                CliError::Numerical(msg)
            }
            QgpeError::Io(_) => CliError::Other(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
