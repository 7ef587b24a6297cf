//! Training and validation data for the constitutive model benchmark.
//!
//! The crate turns reference materials from `refmat` into datasets the
//! architectures consume: bounded random-walk strain histories simulated into
//! sequence databases, spline-based paths for the time-input architecture,
//! two fixed validation paths (interpolation and extrapolation), window
//! extraction for feed-forward training, and the normalization that maps
//! every physical quantity into the unit box while preserving derivative
//! relations between them. Databases travel as CSV with a JSON scaling
//! sidecar; all generation is deterministic given a seed.

pub mod database;
pub mod error;
pub mod paths;
pub mod scaling;
pub mod spline;
pub mod walk;

pub use database::{to_fnn_tuples, Database, FnnTuple, SeqStep, Sequence};
pub use error::DatagenError;
pub use paths::{
    build_extrapolation_path, build_interpolation_path, extrapolation_path, interpolation_path,
    path_from_csv, path_to_csv, spline_knots,
};
pub use scaling::{QuantityScale, ScalingSet};
pub use spline::{gen_spline_path, CubicSpline};
pub use walk::{gen_random_walk, gen_walk_sequence, RandomWalkConfig};
