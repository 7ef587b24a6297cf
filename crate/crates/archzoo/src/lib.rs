//! Constitutive-model architectures for 1D inelasticity.
//!
//! Seven model families share a common interface: each is described by an
//! [`ArchConfig`], holds a flat parameter vector, and supports a training
//! objective (built on taped reverse-mode differentiation) plus an
//! autoregressive prediction rollout over a strain path.
//!
//! The families split into three groups:
//!
//! * black-box stress maps (`fnn-sigma`, `rnn-sigma`) that regress the next
//!   stress directly from recent strain history,
//! * internal-variable models (`fnn-xipsi`, `rnn-xipsi`) that evolve latent
//!   state with a learned stepper and recover stress from a learned energy,
//! * potential-based models (`fnn-psiphi`, `fnn-psiphistar`, `fnn-psiphixi`)
//!   that learn a free energy together with a dissipation potential (or its
//!   dual) and advance state by solving the resulting evolution equation.

mod config;
mod error;
mod model;
mod nr;
mod objective;
mod potentials;
mod predict;
mod scaled;
mod trace;

pub use config::{preset, ArchConfig, ArchKind, SubNet, ALL_KINDS};
pub use error::ArchError;
pub use model::TrainedModel;
pub use nr::{BiotStep, BiotStepper, NR_MAX_HALVINGS, NR_MAX_ITERS, NR_TOLERANCE};
pub use objective::{LossBreakdown, LossTerm, Objective};
pub use potentials::{
    aux_xi_graph, dissipation_graph, energy_graph, DissipationGraph, EnergyGraph,
};
pub use predict::{aux_xi_history, predict_path};
pub use scaled::{scale_database, sigma_tuples, ScaledSequence, ScaledTuple};
pub use trace::{PredictionTrace, TraceRow};
