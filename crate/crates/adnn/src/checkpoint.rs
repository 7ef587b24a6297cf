//! Flat JSON checkpoints for network parameters.
//!
//! A checkpoint couples the architecture description needed to rebuild the
//! graph (widths, activations, constraint modes, init seed) with the raw
//! parameter vector. `serde_json` prints floats in shortest round-trip form,
//! so saving and loading reproduces every parameter bit for bit.

use serde::{Deserialize, Serialize};

use crate::net::NetSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub spec: NetSpec,
    pub seed: u64,
    /// Pre-parameters in layer layout order (weights row-major, then biases).
    pub params: Vec<f64>,
}

impl NetCheckpoint {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init_glorot, Activation, NetSpec};

    #[test]
    fn json_round_trip_is_bit_exact() {
        let spec = NetSpec::dense(vec![4, 15, 1], Activation::Tanh);
        let params = init_glorot(&spec, 123);
        let ck = NetCheckpoint {
            spec: spec.clone(),
            seed: 123,
            params: params.clone(),
        };
        let json = ck.to_json().unwrap();
        let back = NetCheckpoint::from_json(&json).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.seed, 123);
        assert_eq!(back.params.len(), params.len());
        for (a, b) in back.params.iter().zip(&params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
