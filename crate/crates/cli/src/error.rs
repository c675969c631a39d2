use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed field file {path}, line {line}: {reason}")]
    FieldFormat { path: PathBuf, line: usize, reason: String },
    #[error("solver failure: {0}")]
    Solver(#[from] nlsfem::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} study runs failed; the table is incomplete")]
    StudyIncomplete { failed: usize, total: usize },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Input { .. } | Self::FieldFormat { .. } => EXIT_CONFIG,
            Self::Solver(nlsfem::Error::InvalidParameter { .. } | nlsfem::Error::InvalidDomain) => EXIT_CONFIG,
            Self::Solver(_) | Self::Output { .. } | Self::StudyIncomplete { .. } => EXIT_SOLVER,
            Self::CheckFailed(_) => EXIT_CHECK,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
