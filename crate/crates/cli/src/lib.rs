//! Batch driver: configuration, run directories, CSV output and figures.

pub mod config;
pub mod figure;
pub mod fit;
pub mod rundir;
pub mod svg;
pub mod tracks;

use qdecay_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("missing inputs: {}", .0.join(", "))]
    MissingInputs(Vec<String>),
    #[error("{context}: {source}")]
    Numeric { context: String, source: Error },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input {path}: {reason}")]
    Malformed { path: String, reason: String },
}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        match source {
            Error::InvalidParams(msg) => CliError::Config(vec![msg]),
            Error::Io(msg) => CliError::Io(std::io::Error::other(msg)),
            source => CliError::Numeric { context: "numerics".into(), source },
        }
    }
}

impl CliError {
    pub fn numeric(context: impl Into<String>, source: Error) -> Self {
        CliError::Numeric { context: context.into(), source }
    }

    /// 2 for configuration and input problems, 3 when a numerical budget
    /// (unitarity, window, step, radicand) is exceeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingInputs(_) => 2,
            CliError::Numeric { source, .. } => match source {
                Error::BudgetExceeded { .. }
                | Error::WindowOverflow { .. }
                | Error::StepTooLarge(_)
                | Error::NegativeRadicand { .. } => 3,
                Error::InvalidParams(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub use config::{Command, Config};
