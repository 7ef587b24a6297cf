//! Architecture descriptions and per-material default configurations.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use adnn::{init_glorot, init_lstm, Activation, LstmSpec, NetSpec};
use refmat::MaterialId;
use serde::{Deserialize, Serialize};

use crate::error::ArchError;

/// The seven model families under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    /// Black box: one FNN maps a strain/stress history window to stress.
    FnnSigma,
    /// Black box: LSTM cell plus FNN head maps strain sequences to stress.
    RnnSigma,
    /// Weak form: one FNN steps the internal variables, a second one maps
    /// strain and internal variables to free energy; stress by
    /// differentiation, nonnegative dissipation as a penalty.
    FnnXiPsi,
    /// Weak form: LSTM invents internal variables, an FNN head maps them with
    /// strain to free energy.
    RnnXiPsi,
    /// Strong form: free-energy net plus convex dissipation-potential net;
    /// evolution from the Biot equation, dissipation nonnegative a priori.
    FnnPsiPhi,
    /// Strong form with the dual dissipation potential in the internal
    /// forces.
    FnnPsiPhiStar,
    /// Strong form trained with an auxiliary time-to-internal-variable net on
    /// a smooth path, so the dataset needs no internal variables.
    FnnPsiPhiXi,
}

pub const ALL_KINDS: [ArchKind; 7] = [
    ArchKind::FnnSigma,
    ArchKind::RnnSigma,
    ArchKind::FnnXiPsi,
    ArchKind::RnnXiPsi,
    ArchKind::FnnPsiPhi,
    ArchKind::FnnPsiPhiStar,
    ArchKind::FnnPsiPhiXi,
];

impl ArchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArchKind::FnnSigma => "fnn-sigma",
            ArchKind::RnnSigma => "rnn-sigma",
            ArchKind::FnnXiPsi => "fnn-xipsi",
            ArchKind::RnnXiPsi => "rnn-xipsi",
            ArchKind::FnnPsiPhi => "fnn-psiphi",
            ArchKind::FnnPsiPhiStar => "fnn-psiphistar",
            ArchKind::FnnPsiPhiXi => "fnn-psiphixi",
        }
    }

    /// Kinds whose predictions solve the Biot equation step by step and
    /// therefore carry the built-in nonnegative-dissipation guarantee.
    pub fn is_strong_form(&self) -> bool {
        matches!(
            self,
            ArchKind::FnnPsiPhi | ArchKind::FnnPsiPhiStar | ArchKind::FnnPsiPhiXi
        )
    }

    /// Kinds trained on the smooth spline dataset instead of random walks.
    pub fn needs_spline_data(&self) -> bool {
        matches!(self, ArchKind::FnnPsiPhiXi)
    }

    /// Kinds whose training data must include internal-variable columns.
    pub fn needs_xi_columns(&self) -> bool {
        matches!(
            self,
            ArchKind::FnnXiPsi | ArchKind::FnnPsiPhi | ArchKind::FnnPsiPhiStar
        )
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_KINDS
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = ALL_KINDS.iter().map(|k| k.as_str()).collect();
                format!("unknown architecture '{s}', expected one of: {}", names.join(", "))
            })
    }
}

/// Full description of one architecture instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArchConfig {
    FnnSigma {
        /// Time increments enter the input window only for rate-dependent
        /// materials.
        rate_dependent: bool,
        /// Number of preceding steps in the input window.
        n_prec: usize,
        width: usize,
        act: Activation,
    },
    RnnSigma {
        rate_dependent: bool,
        n_cells: usize,
        width: usize,
        act: Activation,
    },
    FnnXiPsi {
        /// Internal variables of the dataset; the stepping net predicts all
        /// of them.
        n_internal: usize,
        width_xi: usize,
        width_psi: usize,
        act_xi: Activation,
        act_psi: Activation,
        w_sig: f64,
        /// Free energy is treated as unavailable by default.
        w_psi: f64,
        w_diss: f64,
    },
    RnnXiPsi {
        rate_dependent: bool,
        n_cells: usize,
        /// Number of internal variables the model invents; independent of
        /// the dataset's count.
        n_xi: usize,
        width_xi: usize,
        width_psi: usize,
        act_xi: Activation,
        act_psi: Activation,
        w_sig: f64,
        w_diss: f64,
    },
    FnnPsiPhi {
        n_internal: usize,
        width_phicon: usize,
        width_phipos: usize,
        width_psi: usize,
        act_psi: Activation,
        w_sig: f64,
        w_biot: f64,
    },
    FnnPsiPhiStar {
        n_internal: usize,
        width_phicon: usize,
        width_phipos: usize,
        width_psi: usize,
        act_psi: Activation,
        w_sig: f64,
        w_xidot: f64,
    },
    FnnPsiPhiXi {
        /// The auxiliary net proposes a single internal variable.
        n_internal: usize,
        width_phicon: usize,
        width_phipos: usize,
        width_psi: usize,
        width_xinet: usize,
        act_psi: Activation,
        act_xinet: Activation,
        w_sig: f64,
        w_biot: f64,
        w_xiabs: f64,
        /// Scale dividing the wall-clock time input of the auxiliary net.
        t_scale: f64,
    },
}

/// Default configuration for a kind/material pairing.
pub fn preset(kind: ArchKind, material: MaterialId) -> ArchConfig {
    let rate = material.rate_dependent();
    let n_internal = refmat::Material::from_id(material).n_internal();
    let plastic = !rate;
    match kind {
        ArchKind::FnnSigma => ArchConfig::FnnSigma {
            rate_dependent: rate,
            n_prec: 1,
            width: if material == MaterialId::V2 { 25 } else { 15 },
            act: if rate { Activation::Tanh } else { Activation::Relu },
        },
        ArchKind::RnnSigma => {
            let (n_cells, width) = match material {
                MaterialId::V1 => (6, 10),
                MaterialId::V2 | MaterialId::P1 => (10, 10),
                MaterialId::P2 => (12, 20),
            };
            ArchConfig::RnnSigma {
                rate_dependent: rate,
                n_cells,
                width,
                act: if rate { Activation::Tanh } else { Activation::Relu },
            }
        }
        ArchKind::FnnXiPsi => ArchConfig::FnnXiPsi {
            n_internal,
            width_xi: 15,
            width_psi: 15,
            act_xi: if plastic { Activation::Relu } else { Activation::Tanh },
            act_psi: Activation::Tanh,
            w_sig: 1.0,
            w_psi: 0.0,
            w_diss: 1.0,
        },
        ArchKind::RnnXiPsi => {
            let (n_cells, n_xi, width_xi, width_psi) = match material {
                MaterialId::V1 => (6, 1, 10, 10),
                MaterialId::V2 => (6, 2, 10, 10),
                MaterialId::P1 => (10, 1, 10, 10),
                MaterialId::P2 => (12, 3, 15, 20),
            };
            ArchConfig::RnnXiPsi {
                rate_dependent: rate,
                n_cells,
                n_xi,
                width_xi,
                width_psi,
                act_xi: if plastic { Activation::Relu } else { Activation::Tanh },
                act_psi: Activation::Tanh,
                w_sig: 1.0,
                w_diss: 5.0,
            }
        }
        ArchKind::FnnPsiPhi => ArchConfig::FnnPsiPhi {
            n_internal,
            width_phicon: 20,
            width_phipos: 20,
            width_psi: 15,
            act_psi: Activation::Tanh,
            w_sig: 1.0,
            w_biot: 0.3,
        },
        ArchKind::FnnPsiPhiStar => ArchConfig::FnnPsiPhiStar {
            n_internal,
            width_phicon: 20,
            width_phipos: 20,
            width_psi: 15,
            act_psi: Activation::Tanh,
            w_sig: 1.0,
            w_xidot: 1.0,
        },
        ArchKind::FnnPsiPhiXi => ArchConfig::FnnPsiPhiXi {
            n_internal: 1,
            width_phicon: 20,
            width_phipos: 20,
            width_psi: 15,
            width_xinet: if plastic { 75 } else { 40 },
            act_psi: Activation::Tanh,
            act_xinet: Activation::Tanh,
            w_sig: 10.0,
            w_biot: 1.0,
            w_xiabs: 1.0,
            t_scale: 12.0,
        },
    }
}

/// One trainable building block of an architecture.
#[derive(Debug, Clone, PartialEq)]
pub enum SubNet {
    Net(NetSpec),
    Lstm(LstmSpec),
}

impl SubNet {
    pub fn n_params(&self) -> usize {
        match self {
            SubNet::Net(spec) => spec.n_params(),
            SubNet::Lstm(spec) => spec.n_params(),
        }
    }
}

impl ArchConfig {
    pub fn kind(&self) -> ArchKind {
        match self {
            ArchConfig::FnnSigma { .. } => ArchKind::FnnSigma,
            ArchConfig::RnnSigma { .. } => ArchKind::RnnSigma,
            ArchConfig::FnnXiPsi { .. } => ArchKind::FnnXiPsi,
            ArchConfig::RnnXiPsi { .. } => ArchKind::RnnXiPsi,
            ArchConfig::FnnPsiPhi { .. } => ArchKind::FnnPsiPhi,
            ArchConfig::FnnPsiPhiStar { .. } => ArchKind::FnnPsiPhiStar,
            ArchConfig::FnnPsiPhiXi { .. } => ArchKind::FnnPsiPhiXi,
        }
    }

    /// Internal variables the model exposes in predictions, if any.
    pub fn n_xi_out(&self) -> usize {
        match *self {
            ArchConfig::FnnSigma { .. } | ArchConfig::RnnSigma { .. } => 0,
            ArchConfig::FnnXiPsi { n_internal, .. } => n_internal,
            ArchConfig::RnnXiPsi { n_xi, .. } => n_xi,
            ArchConfig::FnnPsiPhi { n_internal, .. }
            | ArchConfig::FnnPsiPhiStar { n_internal, .. }
            | ArchConfig::FnnPsiPhiXi { n_internal, .. } => n_internal,
        }
    }

    /// The named trainable sub-nets, in parameter-vector order.
    pub fn subnets(&self) -> Vec<(&'static str, SubNet)> {
        match *self {
            ArchConfig::FnnSigma {
                rate_dependent,
                n_prec,
                width,
                act,
            } => {
                let n_in = 1 + n_prec * if rate_dependent { 3 } else { 2 };
                vec![("stress", SubNet::Net(NetSpec::dense(vec![n_in, width, 1], act)))]
            }
            ArchConfig::RnnSigma {
                rate_dependent,
                n_cells,
                width,
                act,
            } => vec![
                (
                    "cell",
                    SubNet::Lstm(LstmSpec {
                        n_inputs: if rate_dependent { 2 } else { 1 },
                        n_cells,
                    }),
                ),
                ("head", SubNet::Net(NetSpec::dense(vec![n_cells, width, 1], act))),
            ],
            ArchConfig::FnnXiPsi {
                n_internal,
                width_xi,
                width_psi,
                act_xi,
                act_psi,
                ..
            } => vec![
                (
                    "stepper",
                    SubNet::Net(NetSpec::dense(vec![4 + n_internal, width_xi, n_internal], act_xi)),
                ),
                (
                    "energy",
                    SubNet::Net(NetSpec::dense(vec![1 + n_internal, width_psi, 1], act_psi)),
                ),
            ],
            ArchConfig::RnnXiPsi {
                rate_dependent,
                n_cells,
                n_xi,
                width_xi,
                width_psi,
                act_xi,
                act_psi,
                ..
            } => vec![
                (
                    "cell",
                    SubNet::Lstm(LstmSpec {
                        n_inputs: if rate_dependent { 2 } else { 1 },
                        n_cells,
                    }),
                ),
                (
                    "reducer",
                    SubNet::Net(NetSpec::dense(vec![n_cells, width_xi, n_xi], act_xi)),
                ),
                (
                    "energy",
                    SubNet::Net(NetSpec::dense(vec![1 + n_xi, width_psi, 1], act_psi)),
                ),
            ],
            ArchConfig::FnnPsiPhi {
                n_internal,
                width_phicon,
                width_phipos,
                width_psi,
                act_psi,
                ..
            }
            | ArchConfig::FnnPsiPhiStar {
                n_internal,
                width_phicon,
                width_phipos,
                width_psi,
                act_psi,
                ..
            } => vec![
                (
                    "energy",
                    SubNet::Net(NetSpec::dense(vec![1 + n_internal, width_psi, 1], act_psi)),
                ),
                (
                    "dissipation-convex",
                    SubNet::Net(NetSpec::convex(vec![n_internal, width_phicon, 1])),
                ),
                (
                    "dissipation-positive",
                    SubNet::Net(NetSpec::positive(vec![1 + n_internal, width_phipos, 1])),
                ),
            ],
            ArchConfig::FnnPsiPhiXi {
                n_internal,
                width_phicon,
                width_phipos,
                width_psi,
                width_xinet,
                act_psi,
                act_xinet,
                ..
            } => vec![
                (
                    "energy",
                    SubNet::Net(NetSpec::dense(vec![1 + n_internal, width_psi, 1], act_psi)),
                ),
                (
                    "dissipation-convex",
                    SubNet::Net(NetSpec::convex(vec![n_internal, width_phicon, 1])),
                ),
                (
                    "dissipation-positive",
                    SubNet::Net(NetSpec::positive(vec![1 + n_internal, width_phipos, 1])),
                ),
                (
                    "aux-xi",
                    SubNet::Net(NetSpec::dense(vec![1, width_xinet, n_internal], act_xinet)),
                ),
            ],
        }
    }

    /// Parameter-vector slice of each sub-net, in `subnets()` order.
    pub fn param_ranges(&self) -> Vec<(&'static str, Range<usize>)> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (name, net) in self.subnets() {
            let n = net.n_params();
            out.push((name, offset..offset + n));
            offset += n;
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.subnets().iter().map(|(_, n)| n.n_params()).sum()
    }

    pub fn param_range(&self, name: &str) -> Option<Range<usize>> {
        self.param_ranges()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| r)
    }

    /// Feed-forward sub-net spec and its parameter slice, by name.
    pub fn net(&self, name: &str) -> Result<(NetSpec, Range<usize>), ArchError> {
        match self.lookup(name)? {
            (SubNet::Net(spec), range) => Ok((spec, range)),
            (SubNet::Lstm(_), _) => Err(ArchError::Config(format!(
                "sub-net `{name}` of `{}` is recurrent, not feed-forward",
                self.kind()
            ))),
        }
    }

    /// Recurrent sub-net spec and its parameter slice, by name.
    pub fn lstm(&self, name: &str) -> Result<(LstmSpec, Range<usize>), ArchError> {
        match self.lookup(name)? {
            (SubNet::Lstm(spec), range) => Ok((spec, range)),
            (SubNet::Net(_), _) => Err(ArchError::Config(format!(
                "sub-net `{name}` of `{}` is feed-forward, not recurrent",
                self.kind()
            ))),
        }
    }

    fn lookup(&self, name: &str) -> Result<(SubNet, Range<usize>), ArchError> {
        let mut offset = 0;
        for (n, net) in self.subnets() {
            let len = net.n_params();
            if n == name {
                return Ok((net, offset..offset + len));
            }
            offset += len;
        }
        Err(ArchError::Config(format!(
            "`{}` has no sub-net named `{name}`",
            self.kind()
        )))
    }

    /// Seeded initialization of the full parameter vector; each sub-net gets
    /// its own stream.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.n_params());
        for (i, (_, net)) in self.subnets().iter().enumerate() {
            let sub_seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
            match net {
                SubNet::Net(spec) => params.extend(init_glorot(spec, sub_seed)),
                SubNet::Lstm(spec) => params.extend(init_lstm(spec, sub_seed)),
            }
        }
        params
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let bad = |msg: String| Err(ArchError::Config(msg));
        let check_weight = |name: &str, w: f64| {
            if w < 0.0 || !w.is_finite() {
                return Err(ArchError::Config(format!(
                    "loss weight {name} must be finite and nonnegative, got {w}"
                )));
            }
            Ok(())
        };
        for (name, net) in self.subnets() {
            match net {
                SubNet::Net(spec) => spec.validate().map_err(|e| {
                    ArchError::Config(format!("sub-net '{name}': {e}"))
                })?,
                SubNet::Lstm(spec) => {
                    if spec.n_cells == 0 || spec.n_inputs == 0 {
                        return bad(format!("sub-net '{name}': zero-size recurrent cell"));
                    }
                }
            }
        }
        match *self {
            ArchConfig::FnnSigma { n_prec, .. } => {
                if n_prec == 0 {
                    return bad("input window needs at least one preceding step".into());
                }
            }
            ArchConfig::FnnXiPsi {
                n_internal,
                w_sig,
                w_psi,
                w_diss,
                ..
            } => {
                if n_internal == 0 {
                    return bad("need at least one internal variable".into());
                }
                check_weight("w_sig", w_sig)?;
                check_weight("w_psi", w_psi)?;
                check_weight("w_diss", w_diss)?;
            }
            ArchConfig::RnnXiPsi { n_xi, w_sig, w_diss, .. } => {
                if n_xi == 0 {
                    return bad("need at least one invented internal variable".into());
                }
                check_weight("w_sig", w_sig)?;
                check_weight("w_diss", w_diss)?;
            }
            ArchConfig::FnnPsiPhi {
                n_internal,
                w_sig,
                w_biot,
                ..
            } => {
                if n_internal == 0 {
                    return bad("need at least one internal variable".into());
                }
                check_weight("w_sig", w_sig)?;
                check_weight("w_biot", w_biot)?;
            }
            ArchConfig::FnnPsiPhiStar {
                n_internal,
                w_sig,
                w_xidot,
                ..
            } => {
                if n_internal == 0 {
                    return bad("need at least one internal variable".into());
                }
                check_weight("w_sig", w_sig)?;
                check_weight("w_xidot", w_xidot)?;
            }
            ArchConfig::FnnPsiPhiXi {
                n_internal,
                w_sig,
                w_biot,
                w_xiabs,
                t_scale,
                ..
            } => {
                if n_internal == 0 {
                    return bad("need at least one internal variable".into());
                }
                if !(t_scale > 0.0) {
                    return bad(format!("time scale must be positive, got {t_scale}"));
                }
                check_weight("w_sig", w_sig)?;
                check_weight("w_biot", w_biot)?;
                check_weight("w_xiabs", w_xiabs)?;
            }
            ArchConfig::RnnSigma { .. } => {}
        }
        Ok(())
    }
}
