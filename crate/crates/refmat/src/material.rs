//! Material front end: a common state record and time stepping over strain
//! paths, dispatching to the viscoelastic or elastoplastic update.

use serde::{Deserialize, Serialize};

use crate::error::{SimulateError, StepError};
use crate::path::StrainPath;
use crate::plast::PlastParams;
use crate::visco::ViscoParams;

/// Full thermodynamic state after a step. All stresses and energies in MPa,
/// times in seconds, strains dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialState {
    pub t: f64,
    pub eps: f64,
    pub sig: f64,
    /// Internal variables: viscous strains per branch, or
    /// `[eps_pl, alpha, alpha_hat]`.
    pub xi: Vec<f64>,
    /// Thermodynamic forces conjugate to `xi` (`-d psi / d xi`): branch
    /// overstresses, or `[sig, -H alpha, -Hh alpha_hat]`.
    pub tau: Vec<f64>,
    /// Free energy (MPa).
    pub psi: f64,
    /// Dissipation rate of the increment ending at `t`, evaluated as the
    /// backward difference `sum_a tau_a * (xi_a - xi_a_prev) / dt` (MPa/s).
    /// Zero at the initial state.
    pub diss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Material {
    Viscoelastic(ViscoParams),
    Elastoplastic(PlastParams),
}

/// The four reference materials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaterialId {
    V1,
    V2,
    P1,
    P2,
}

impl MaterialId {
    pub const ALL: [MaterialId; 4] = [
        MaterialId::V1,
        MaterialId::V2,
        MaterialId::P1,
        MaterialId::P2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MaterialId::V1 => "v1",
            MaterialId::V2 => "v2",
            MaterialId::P1 => "p1",
            MaterialId::P2 => "p2",
        }
    }

    /// Whether the response depends on the time increments of the path.
    pub fn rate_dependent(&self) -> bool {
        matches!(self, MaterialId::V1 | MaterialId::V2)
    }
}

impl std::str::FromStr for MaterialId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v1" => Ok(MaterialId::V1),
            "v2" => Ok(MaterialId::V2),
            "p1" => Ok(MaterialId::P1),
            "p2" => Ok(MaterialId::P2),
            other => Err(format!("unknown material '{other}' (expected v1, v2, p1, p2)")),
        }
    }
}

impl std::fmt::Display for MaterialId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Material {
    pub fn from_id(id: MaterialId) -> Self {
        match id {
            MaterialId::V1 => Material::Viscoelastic(ViscoParams::v1()),
            MaterialId::V2 => Material::Viscoelastic(ViscoParams::v2()),
            MaterialId::P1 => Material::Elastoplastic(PlastParams::p1()),
            MaterialId::P2 => Material::Elastoplastic(PlastParams::p2()),
        }
    }

    pub fn v1() -> Self {
        Material::from_id(MaterialId::V1)
    }

    pub fn v2() -> Self {
        Material::from_id(MaterialId::V2)
    }

    pub fn p1() -> Self {
        Material::from_id(MaterialId::P1)
    }

    pub fn p2() -> Self {
        Material::from_id(MaterialId::P2)
    }

    pub fn n_internal(&self) -> usize {
        match self {
            Material::Viscoelastic(v) => v.n_internal(),
            Material::Elastoplastic(p) => p.n_internal(),
        }
    }

    /// Zero state: unstrained, unstressed, no history.
    pub fn initial_state(&self) -> MaterialState {
        MaterialState {
            t: 0.0,
            eps: 0.0,
            sig: 0.0,
            xi: vec![0.0; self.n_internal()],
            tau: vec![0.0; self.n_internal()],
            psi: 0.0,
            diss: 0.0,
        }
    }

    /// Advance from `state` to strain `eps_new` over the increment `dt`
    /// ending at `state.t + dt`.
    pub fn step(
        &self,
        state: &MaterialState,
        eps_new: f64,
        dt: f64,
    ) -> Result<MaterialState, StepError> {
        match self {
            Material::Viscoelastic(v) => {
                let (xi, tau) = v.step(&state.xi, eps_new, dt)?;
                let sig = v.stiffness * eps_new + tau.iter().sum::<f64>();
                let psi = v.psi(eps_new, &xi);
                let diss = xi
                    .iter()
                    .zip(&state.xi)
                    .zip(&tau)
                    .map(|((new, old), s)| s * (new - old) / dt)
                    .sum();
                Ok(MaterialState {
                    t: state.t + dt,
                    eps: eps_new,
                    sig,
                    xi,
                    tau,
                    psi,
                    diss,
                })
            }
            Material::Elastoplastic(p) => {
                if !(eps_new.is_finite() && dt.is_finite() && dt > 0.0) {
                    return Err(StepError::NonFinite { eps: eps_new, dt });
                }
                let u = p.step(state.xi[0], state.xi[1], state.xi[2], eps_new);
                let tau = vec![
                    u.sig,
                    -p.kinematic_modulus * u.alpha,
                    -p.isotropic_modulus * u.alpha_hat,
                ];
                let xi = vec![u.eps_pl, u.alpha, u.alpha_hat];
                // tau . dxi collapses to sig_y0 * dlambda for the exact
                // return mapping; keep the general backward difference.
                let diss = xi
                    .iter()
                    .zip(&state.xi)
                    .zip(&tau)
                    .map(|((new, old), f)| f * (new - old) / dt)
                    .sum();
                Ok(MaterialState {
                    t: state.t + dt,
                    eps: eps_new,
                    sig: u.sig,
                    xi,
                    tau,
                    psi: p.psi(eps_new, u.eps_pl, u.alpha, u.alpha_hat),
                    diss,
                })
            }
        }
    }

    /// Integrate over a whole path. The result starts with the zero state,
    /// so it has `path.len() + 1` entries aligned one-to-one with
    /// `[initial, steps...]`.
    pub fn simulate(&self, path: &StrainPath) -> Result<Vec<MaterialState>, SimulateError> {
        let mut trace = Vec::with_capacity(path.len() + 1);
        trace.push(self.initial_state());
        for (i, step) in path.steps().iter().enumerate() {
            let next = self
                .step(trace.last().expect("trace starts with initial state"), step.eps, step.dt)
                .map_err(|source| SimulateError::Step { step: i, source })?;
            trace.push(next);
        }
        Ok(trace)
    }
}
