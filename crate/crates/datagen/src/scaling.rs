//! Normalization of physical quantities for network inputs and outputs.
//!
//! Strain, time increment, and free energy get their scales from database
//! extrema, symmetrized so the offset is zero and scaled magnitudes stay
//! inside `[-1, 1]`. Every other quantity inherits a derived scale so that
//! exact relations survive normalization: differentiating scaled energy by
//! scaled strain yields scaled stress without correction factors, and the
//! same holds for the thermodynamic forces and both dissipation potentials.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::DatagenError;

/// Affine map `q_scaled = (q - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityScale {
    pub offset: f64,
    pub scale: f64,
}

impl QuantityScale {
    pub fn apply(&self, q: f64) -> f64 {
        (q - self.offset) / self.scale
    }

    pub fn invert(&self, q_scaled: f64) -> f64 {
        self.offset + self.scale * q_scaled
    }
}

/// Scales of every quantity the architectures exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSet {
    pub eps: QuantityScale,
    pub dt: QuantityScale,
    pub psi: QuantityScale,
    pub sig: QuantityScale,
    pub xi: QuantityScale,
    pub tau: QuantityScale,
    pub phi: QuantityScale,
    pub phi_star: QuantityScale,
}

impl ScalingSet {
    /// Measure strain, increment, and energy extrema of the database and
    /// derive the dependent scales.
    pub fn fit(db: &Database) -> Result<Self, DatagenError> {
        let mut max_eps = 0.0f64;
        let mut max_dt = 0.0f64;
        let mut max_psi = 0.0f64;
        for seq in &db.sequences {
            for s in &seq.steps {
                max_eps = max_eps.max(s.eps.abs());
                max_dt = max_dt.max(s.dt.abs());
                max_psi = max_psi.max(s.psi.abs());
            }
        }
        Self::from_extrema(max_eps, max_dt, max_psi)
    }

    /// Build the set from the largest magnitudes of the independent
    /// quantities.
    pub fn from_extrema(max_eps: f64, max_dt: f64, max_psi: f64) -> Result<Self, DatagenError> {
        let base = |name: &'static str, m: f64| -> Result<QuantityScale, DatagenError> {
            if !(m > 0.0) || !m.is_finite() {
                return Err(DatagenError::DegenerateScale { quantity: name });
            }
            Ok(QuantityScale {
                offset: 0.0,
                scale: m,
            })
        };
        let eps = base("eps", max_eps)?;
        let dt = base("dt", max_dt)?;
        let psi = base("psi", max_psi)?;
        let derived = |scale: f64| QuantityScale { offset: 0.0, scale };
        Ok(ScalingSet {
            eps,
            dt,
            psi,
            sig: derived(psi.scale / eps.scale),
            xi: derived(eps.scale),
            tau: derived(psi.scale / eps.scale),
            phi: derived(psi.scale / dt.scale),
            phi_star: derived(psi.scale / dt.scale),
        })
    }

    /// Scale of an internal-variable rate `xi / dt`.
    pub fn xi_rate_scale(&self) -> f64 {
        self.xi.scale / self.dt.scale
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scaling serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatagenError> {
        serde_json::from_str(text).map_err(|e| DatagenError::Parse(e.to_string()))
    }

    pub fn write_json_file(&self, path: &Path) -> Result<(), DatagenError> {
        let mut f = std::fs::File::create(path).map_err(DatagenError::Io)?;
        f.write_all(self.to_json().as_bytes()).map_err(DatagenError::Io)?;
        f.write_all(b"\n").map_err(DatagenError::Io)
    }

    pub fn read_json_file(path: &Path) -> Result<Self, DatagenError> {
        let mut text = String::new();
        std::fs::File::open(path)
            .map_err(DatagenError::Io)?
            .read_to_string(&mut text)
            .map_err(DatagenError::Io)?;
        Self::from_json(&text)
    }
}
