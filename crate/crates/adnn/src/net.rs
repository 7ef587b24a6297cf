//! Dense feed-forward networks traced onto a [`Tape`].
//!
//! A network is described by a [`NetSpec`] (widths, hidden activations,
//! weight constraints) and a flat parameter vector. Parameters enter the tape
//! as leaves, so one traced forward pass can be re-evaluated for new
//! parameter values with [`Tape::refresh`].
//!
//! Weight constraints are enforced by construction rather than by
//! projection: a constrained weight is stored as an unconstrained
//! pre-parameter `v` and materialized on the tape as `softplus(v) >= 0`.
//! Gradients w.r.t. `v` then flow through the reparameterization and any
//! optimizer step keeps the materialized weight non-negative.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AdnnError;
use crate::tape::{NodeId, Tape};

/// Hidden-layer activation function. Output layers are always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Softplus,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: NodeId) -> NodeId {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
            Activation::Softplus => tape.softplus(x),
        }
    }
}

/// Which weights are reparameterized to be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Plain dense net.
    Free,
    /// Every weight non-negative. Combined with convex non-decreasing
    /// activations this makes the scalar output convex in the inputs.
    NonnegAll,
    /// Only the output layer's weights non-negative. Combined with positive
    /// hidden activations and a non-negative output bias this makes the
    /// scalar output non-negative.
    NonnegOutput,
}

/// Which biases are reparameterized to be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    Free,
    /// Output-layer bias non-negative (hidden biases never need constraining
    /// for convexity or positivity).
    NonnegOutput,
}

/// Architecture of a dense net: `widths[0]` inputs through `widths.last()`
/// outputs, one activation per hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weight_mode: WeightMode,
    pub bias_mode: BiasMode,
}

impl NetSpec {
    /// Unconstrained net with the same activation on every hidden layer.
    pub fn dense(widths: Vec<usize>, activation: Activation) -> Self {
        let hidden = widths.len().saturating_sub(2);
        NetSpec {
            widths,
            activations: vec![activation; hidden],
            weight_mode: WeightMode::Free,
            bias_mode: BiasMode::Free,
        }
    }

    /// Input-convex net: softplus hidden layers, all weights non-negative.
    pub fn convex(widths: Vec<usize>) -> Self {
        let hidden = widths.len().saturating_sub(2);
        NetSpec {
            widths,
            activations: vec![Activation::Softplus; hidden],
            weight_mode: WeightMode::NonnegAll,
            bias_mode: BiasMode::Free,
        }
    }

    /// Non-negative net: softplus hidden layers, non-negative output weights
    /// and output bias.
    pub fn positive(widths: Vec<usize>) -> Self {
        let hidden = widths.len().saturating_sub(2);
        NetSpec {
            widths,
            activations: vec![Activation::Softplus; hidden],
            weight_mode: WeightMode::NonnegOutput,
            bias_mode: BiasMode::NonnegOutput,
        }
    }

    pub fn validate(&self) -> Result<(), AdnnError> {
        if self.widths.len() < 2 {
            return Err(AdnnError::TooFewLayers(self.widths.len()));
        }
        if let Some(layer) = self.widths.iter().position(|&w| w == 0) {
            return Err(AdnnError::ZeroWidth { layer });
        }
        let hidden = self.widths.len() - 2;
        if self.activations.len() != hidden {
            return Err(AdnnError::ActivationCount {
                expected: hidden,
                hidden,
                got: self.activations.len(),
            });
        }
        if self.weight_mode != WeightMode::Free || self.bias_mode != BiasMode::Free {
            // Constrained nets are differentiated at least twice (their
            // outputs feed residuals that are differentiated again), and the
            // convexity/positivity arguments need softplus specifically.
            if let Some(&activation) = self
                .activations
                .iter()
                .find(|&&a| a != Activation::Softplus)
            {
                return Err(AdnnError::ActivationUnderConstraint { activation });
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.widths[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.widths.last().expect("validated spec has layers")
    }

    /// Total number of parameters: per layer a dense weight matrix plus one
    /// bias per neuron.
    pub fn n_params(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    fn is_last_layer(&self, layer: usize) -> bool {
        layer + 2 == self.widths.len()
    }

    fn weight_constrained(&self, layer: usize) -> bool {
        match self.weight_mode {
            WeightMode::Free => false,
            WeightMode::NonnegAll => true,
            WeightMode::NonnegOutput => self.is_last_layer(layer),
        }
    }

    fn bias_constrained(&self, layer: usize) -> bool {
        match self.bias_mode {
            BiasMode::Free => false,
            BiasMode::NonnegOutput => self.is_last_layer(layer),
        }
    }
}

/// Glorot-uniform pre-parameters: weights from `U(-l, l)` with
/// `l = sqrt(6 / (fan_in + fan_out))`, biases zero. Deterministic in `seed`.
pub fn init_glorot(spec: &NetSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.n_params());
    for w in spec.widths.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            params.push(rng.random_range(-limit..=limit));
        }
        params.extend(std::iter::repeat(0.0).take(fan_out));
    }
    params
}

/// Put a flat parameter vector on the tape as leaves, in layout order.
pub fn params_to_leaves(tape: &mut Tape, params: &[f64]) -> Vec<NodeId> {
    params.iter().map(|&p| tape.leaf(p)).collect()
}

/// Trace one forward pass. `params` follows the layout of [`init_glorot`]:
/// for each layer, the row-major weight matrix `[out][in]`, then the biases.
pub fn fnn_forward(
    tape: &mut Tape,
    spec: &NetSpec,
    params: &[NodeId],
    inputs: &[NodeId],
) -> Result<Vec<NodeId>, AdnnError> {
    spec.validate()?;
    if params.len() != spec.n_params() {
        return Err(AdnnError::ParamCount {
            expected: spec.n_params(),
            got: params.len(),
        });
    }
    if inputs.len() != spec.n_inputs() {
        return Err(AdnnError::InputCount {
            expected: spec.n_inputs(),
            got: inputs.len(),
        });
    }

    let mut current: Vec<NodeId> = inputs.to_vec();
    let mut offset = 0;
    for (layer, w) in spec.widths.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[offset..offset + n_in * n_out];
        let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;

        let mut next = Vec::with_capacity(n_out);
        for n in 0..n_out {
            let mut z = materialize(tape, biases[n], spec.bias_constrained(layer));
            for m in 0..n_in {
                let wmn = materialize(tape, weights[n * n_in + m], spec.weight_constrained(layer));
                let term = tape.mul(wmn, current[m]);
                z = tape.add(z, term);
            }
            next.push(if spec.is_last_layer(layer) {
                z
            } else {
                spec.activations[layer].apply(tape, z)
            });
        }
        current = next;
    }
    Ok(current)
}

fn materialize(tape: &mut Tape, pre: NodeId, constrained: bool) -> NodeId {
    if constrained {
        tape.softplus(pre)
    } else {
        pre
    }
}

/// Forward pass of an input-convex net; rejects specs that do not guarantee
/// convexity of the scalar output.
pub fn icnn_forward(
    tape: &mut Tape,
    spec: &NetSpec,
    params: &[NodeId],
    inputs: &[NodeId],
) -> Result<Vec<NodeId>, AdnnError> {
    if spec.weight_mode != WeightMode::NonnegAll {
        return Err(AdnnError::WrongMode {
            role: "input-convex network",
            expected: WeightMode::NonnegAll,
            got: spec.weight_mode,
        });
    }
    fnn_forward(tape, spec, params, inputs)
}

/// Forward pass of a net with non-negative output; rejects specs that do not
/// guarantee the sign.
pub fn positive_net_forward(
    tape: &mut Tape,
    spec: &NetSpec,
    params: &[NodeId],
    inputs: &[NodeId],
) -> Result<Vec<NodeId>, AdnnError> {
    if spec.weight_mode != WeightMode::NonnegOutput || spec.bias_mode != BiasMode::NonnegOutput {
        return Err(AdnnError::WrongMode {
            role: "non-negative network",
            expected: WeightMode::NonnegOutput,
            got: spec.weight_mode,
        });
    }
    fnn_forward(tape, spec, params, inputs)
}
