//! Analytic one-dimensional inelastic reference materials.
//!
//! Four materials serve as ground truth for data generation and for judging
//! learned constitutive models:
//!
//! * `V1`: one Maxwell branch with stress-dependent viscosity,
//! * `V2`: two linear Maxwell branches,
//! * `P1`: elastoplasticity with kinematic hardening,
//! * `P2`: elastoplasticity with mixed kinematic/isotropic hardening.
//!
//! All four derive from a free energy and a dissipation potential, so every
//! step reports not only the stress but the internal variables `xi`, their
//! conjugate forces `tau`, the free energy `psi` and the dissipation rate.
//! Internal units are MPa and seconds; constructors take the usual GPa
//! literature values and convert.
//!
//! Viscoelastic stepping is implicit Euler (closed form per linear branch, a
//! damped Newton solve per stress-dependent branch); elastoplastic stepping
//! is the exact scalar return mapping.

pub mod error;
pub mod material;
pub mod path;
pub mod plast;
pub mod visco;

pub use error::{PathError, SimulateError, StepError};
pub use material::{Material, MaterialId, MaterialState};
pub use path::{PathStep, StrainPath};
pub use plast::PlastParams;
pub use visco::{MaxwellBranch, ViscoParams};
