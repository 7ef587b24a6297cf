use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdnnError {
    #[error("network needs at least input and output widths, got {0} entries")]
    TooFewLayers(usize),

    #[error("layer {layer} has width 0")]
    ZeroWidth { layer: usize },

    #[error("expected {expected} hidden activations for {hidden} hidden layers, got {got}")]
    ActivationCount {
        expected: usize,
        hidden: usize,
        got: usize,
    },

    #[error(
        "activation {activation:?} is not twice differentiable / sign-definite; \
         constrained weight modes require softplus throughout"
    )]
    ActivationUnderConstraint { activation: crate::net::Activation },

    #[error("parameter vector has length {got}, spec needs {expected}")]
    ParamCount { expected: usize, got: usize },

    #[error("input has length {got}, spec needs {expected}")]
    InputCount { expected: usize, got: usize },

    #[error("{role} requires weight mode {expected:?}, spec has {got:?}")]
    WrongMode {
        role: &'static str,
        expected: crate::net::WeightMode,
        got: crate::net::WeightMode,
    },
}
