//! Scalar autodiff tape and the small neural networks built on it.
//!
//! The crate has three layers:
//!
//! * [`tape`]: a flat reverse-mode tape. Gradients can be materialized as
//!   plain numbers or as new graph nodes, which keeps first derivatives
//!   (stresses, thermodynamic forces, Biot residuals) differentiable for
//!   second-order use such as Newton Jacobians and gradient-based training
//!   of derivative-containing losses.
//! * [`net`] / [`lstm`]: dense feed-forward and LSTM builders that trace
//!   their forward pass onto a tape. Constrained variants (non-negative
//!   weights for convex or sign-definite outputs) materialize weights
//!   through softplus reparameterization.
//! * [`checkpoint`]: flat JSON serialization of parameter vectors together
//!   with the spec needed to rebuild the graph.

pub mod checkpoint;
pub mod error;
pub mod lstm;
pub mod net;
pub mod tape;

pub use checkpoint::NetCheckpoint;
pub use error::AdnnError;
pub use lstm::{init_lstm, lstm_step, LstmSpec, LstmState};
pub use net::{
    fnn_forward, icnn_forward, init_glorot, params_to_leaves, positive_net_forward, Activation,
    BiasMode, NetSpec, WeightMode,
};
pub use tape::{NodeId, Tape, ONE, ZERO};
