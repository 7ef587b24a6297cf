//! Experiment driver for the constitutive-model benchmark: dataset
//! generation, training, validation rollouts, figure reproduction, and a
//! no-training selftest gate. The binary in `main.rs` is a thin argument
//! parser over these modules so integration tests can call them directly.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;
pub mod selftest;
pub mod validate;

pub use config::{experiment_preset, preset_names, DataConfig, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use experiment::{train_experiment, train_if_missing, RunArtifacts};
pub use figures::{reproduce, FIGURES};
pub use selftest::{run_selftest, run_selftest_subset, CriterionResult};
pub use validate::{validate_model, ValPath, ValidationMetrics};
