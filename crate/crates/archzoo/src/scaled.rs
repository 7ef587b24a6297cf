//! Scaled views of a reference database.
//!
//! All model graphs operate on dimensionless quantities; this module converts
//! a [`Database`] into scaled sequences once, so the objective and predictor
//! code never mixes raw and scaled values. Times stay in raw units because
//! only the auxiliary time net consumes them, with its own divisor.

use datagen::{to_fnn_tuples, Database, ScalingSet, Sequence};

use crate::error::ArchError;

/// One sequence with every quantity divided by its scale. Entry `0` is the
/// rest state with `dt[0] = 0`; for later entries `dt[n]` spans the increment
/// from state `n - 1` to state `n`.
#[derive(Debug, Clone)]
pub struct ScaledSequence {
    pub t: Vec<f64>,
    pub dt: Vec<f64>,
    pub eps: Vec<f64>,
    pub sig: Vec<f64>,
    /// `xi[step][alpha]`.
    pub xi: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
}

impl ScaledSequence {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n_internal(&self) -> usize {
        self.xi.first().map_or(0, Vec::len)
    }

    fn from_sequence(seq: &Sequence, scaling: &ScalingSet) -> Self {
        let n = seq.len();
        let mut out = ScaledSequence {
            t: Vec::with_capacity(n),
            dt: Vec::with_capacity(n),
            eps: Vec::with_capacity(n),
            sig: Vec::with_capacity(n),
            xi: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
        };
        for step in &seq.steps {
            out.t.push(step.t);
            out.dt.push(scaling.dt.apply(step.dt));
            out.eps.push(scaling.eps.apply(step.eps));
            out.sig.push(scaling.sig.apply(step.sig));
            out.xi
                .push(step.xi.iter().map(|&x| scaling.xi.apply(x)).collect());
            out.psi.push(scaling.psi.apply(step.psi));
        }
        out
    }
}

/// Scale every sequence of a database.
pub fn scale_database(db: &Database, scaling: &ScalingSet) -> Vec<ScaledSequence> {
    db.sequences
        .iter()
        .map(|seq| ScaledSequence::from_sequence(seq, scaling))
        .collect()
}

/// One training pair for the history-window stress net: the assembled scaled
/// input vector and the scaled stress target.
#[derive(Debug, Clone)]
pub struct ScaledTuple {
    pub inputs: Vec<f64>,
    pub target: f64,
}

/// Window a database into stress-net tuples, scale them and assemble the
/// input layout: new strain first, then per preceding step its strain, stress
/// and, for rate-dependent data, the time increment leading out of it.
/// Tuples are taken in sequence order; at most `max_tuples` are kept.
pub fn sigma_tuples(
    db: &Database,
    scaling: &ScalingSet,
    n_prec: usize,
    rate_dependent: bool,
    max_tuples: Option<usize>,
) -> Result<Vec<ScaledTuple>, ArchError> {
    let mut raw = to_fnn_tuples(&db.sequences, n_prec);
    if raw.is_empty() {
        return Err(ArchError::Data(format!(
            "no history windows of {n_prec} preceding steps fit the sequences"
        )));
    }
    if let Some(cap) = max_tuples {
        raw.truncate(cap);
    }
    let tuples = raw
        .iter()
        .map(|tuple| {
            let mut inputs = Vec::with_capacity(1 + n_prec * if rate_dependent { 3 } else { 2 });
            inputs.push(scaling.eps.apply(tuple.eps_next));
            for &(eps, sig, dt) in &tuple.history {
                inputs.push(scaling.eps.apply(eps));
                inputs.push(scaling.sig.apply(sig));
                if rate_dependent {
                    inputs.push(scaling.dt.apply(dt));
                }
            }
            ScaledTuple {
                inputs,
                target: scaling.sig.apply(tuple.sig_next),
            }
        })
        .collect();
    Ok(tuples)
}
