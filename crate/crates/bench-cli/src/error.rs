//! CLI errors carrying their process exit code.

use thiserror::Error;

/// Exit code 1 covers runs that start but fail numerically or on IO; exit
/// code 2 covers malformed requests (unknown labels, bad files, invalid
/// pairings) that never get to run.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }

    pub fn config(err: impl std::fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn numeric(err: impl std::fmt::Display) -> Self {
        CliError::Numeric(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Numeric(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Numeric(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
