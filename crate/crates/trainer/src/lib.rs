//! Full-batch training loop for tape-backed losses.
//!
//! The optimizer runs adaptive first-order updates with step decay on
//! plateaus and best-iterate retention, optionally handing the final stretch
//! of the budget to a limited-memory quasi-Newton polish. Gradient checking
//! compares reverse-mode gradients against Richardson-extrapolated central
//! differences and excludes coordinates whose stencils straddle an
//! activation kink.

mod config;
mod error;
mod gradcheck;
mod minimize;
mod report;

pub use config::{Method, OptimConfig};
pub use error::TrainerError;
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_QUORUM, GRAD_CHECK_TOL};
pub use minimize::{minimize, Eval, TermSchema};
pub use report::{Minimized, StopReason, TrainReport, TrajectoryPoint};
