use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("strain bound {bound} and step deviation {sdev} make resampling hopeless: \
             {attempts} rejected draws at sequence {sequence}, step {step}")]
    ResampleBound {
        bound: f64,
        sdev: f64,
        attempts: usize,
        sequence: usize,
        step: usize,
    },

    #[error("quantity '{quantity}' has zero spread; cannot derive a scale")]
    DegenerateScale { quantity: &'static str },

    #[error("spline needs at least three knots, got {0}")]
    TooFewKnots(usize),

    #[error("spline knots must have strictly increasing times (knot {index})")]
    UnorderedKnots { index: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Simulate(#[from] refmat::SimulateError),

    #[error(transparent)]
    Path(#[from] refmat::PathError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("dataset parse: {0}")]
    Parse(String),
}
