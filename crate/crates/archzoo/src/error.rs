use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArchError {
    #[error(transparent)]
    Net(#[from] adnn::AdnnError),

    #[error("configuration: {0}")]
    Config(String),

    #[error("dataset: {0}")]
    Data(String),

    #[error("{what} became non-finite during evaluation")]
    NonFinite { what: &'static str },

    #[error(
        "internal-variable update did not converge at step {step}: \
         residual {residual:e} after {iterations} iterations and {halvings} step halvings"
    )]
    NrDivergence {
        step: usize,
        iterations: usize,
        halvings: usize,
        residual: f64,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
