use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("time must be strictly increasing at step {step}")]
    NonIncreasingTime { step: usize },

    #[error("time increment must be positive at step {step}, got {dt}")]
    NonPositiveDt { step: usize, dt: f64 },

    #[error("t and dt disagree at step {step}: t[{step}] - t[{prev}] = {gap}, dt = {dt}")]
    InconsistentIncrement {
        step: usize,
        prev: usize,
        gap: f64,
        dt: f64,
    },

    #[error("non-finite entry at step {step}")]
    NonFinite { step: usize },
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error(
        "viscous update for branch {branch} did not converge after {iterations} iterations \
         (residual {residual:.3e})"
    )]
    BranchNonconvergence {
        branch: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite state produced (eps = {eps}, dt = {dt})")]
    NonFinite { eps: f64, dt: f64 },
}

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("material step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: StepError,
    },

    #[error(transparent)]
    Path(#[from] PathError),
}
