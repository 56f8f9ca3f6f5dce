use std::process::ExitCode;

use mrgagents::evaluation::EvaluationError;
use mrgagents::labeler::LabelerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input: config, corpus, lexicon.
    #[error("{0}")]
    Input(String),
    /// Join failures and violated wire or data contracts.
    #[error("{0}")]
    Contract(String),
    /// A remote service still failing after retries.
    #[error("{0}")]
    Remote(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Contract(_) => 3,
            CliError::Remote(_) => 4,
        }
    }

    pub fn io(what: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", what.display()))
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        match e {
            LabelerError::Retryable { .. } | LabelerError::Rejected { .. } => CliError::Remote(e.to_string()),
            LabelerError::Protocol { .. } | LabelerError::Contract(_) => CliError::Contract(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::UnmatchedIds(_) => CliError::Contract(e.to_string()),
            EvaluationError::Empty => CliError::Input(e.to_string()),
            EvaluationError::Labeler(inner) => inner.into(),
        }
    }
}
