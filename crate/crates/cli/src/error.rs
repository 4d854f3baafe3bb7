//! CLI error taxonomy and exit-code mapping.

use hemo_uq_core::CoreError;
use thiserror::Error;

/// Exit codes: 0 success, 1 numerical failure, 2 configuration/IO failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("[{stage}] configuration error: {message}")]
    Config { stage: String, message: String },
    #[error("[{stage}] io error: {message}")]
    Io { stage: String, message: String },
    #[error("[{stage}] numerical failure: {message}")]
    Numerical { stage: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numerical { .. } => 1,
        }
    }

    pub fn config(stage: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn io(stage: &str, message: impl Into<String>) -> Self {
        CliError::Io {
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn from_core(stage: &str, err: CoreError) -> Self {
        match err {
            CoreError::NumericalBlowUp(_)
            | CoreError::NewtonDivergence(_)
            | CoreError::DegenerateOutput(_)
            | CoreError::ModelFragility(_)
            | CoreError::UnphysiologicalPulse(_) => CliError::Numerical {
                stage: stage.into(),
                message: err.to_string(),
            },
            CoreError::InvalidModel(_)
            | CoreError::InvalidParameter(_)
            | CoreError::InvalidConfig(_)
            | CoreError::InsufficientCycles(_) => CliError::Config {
                stage: stage.into(),
                message: err.to_string(),
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
