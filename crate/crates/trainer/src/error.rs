//! Error type shared across the crate.

use thiserror::Error;

/// Failures surfaced by the optimizer and the gradient checker.
#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),

    #[error("evaluation shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite {what}")]
    NonFinite { what: String },

    #[error("weighted terms sum to {sum} but the evaluation reports a total of {total}")]
    InconsistentTotal { sum: f64, total: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
