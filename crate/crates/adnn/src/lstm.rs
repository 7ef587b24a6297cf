//! Single LSTM cell traced onto a [`Tape`].
//!
//! The cell follows the standard gate equations with sigmoid input, forget
//! and output gates and a tanh candidate:
//!
//! ```text
//! i = sig(W_i x + U_i h + b_i)      g = tanh(W_g x + U_g h + b_g)
//! f = sig(W_f x + U_f h + b_f)      o = sig(W_o x + U_o h + b_o)
//! c' = f * c + i * g                h' = o * tanh(c')
//! ```
//!
//! Hidden and cell state start at zero. Unrolling a sequence is the caller's
//! loop: feed each step's input together with the previous [`LstmState`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AdnnError;
use crate::tape::{NodeId, Tape, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmSpec {
    pub n_inputs: usize,
    /// Number of memory cells; also the hidden-state width.
    pub n_cells: usize,
}

/// Gate parameter layout order within the flat vector.
const GATES: usize = 4; // input, forget, candidate, output

impl LstmSpec {
    pub fn new(n_inputs: usize, n_cells: usize) -> Self {
        LstmSpec { n_inputs, n_cells }
    }

    /// Per gate: `W [cells][inputs]`, `U [cells][cells]`, `b [cells]`.
    pub fn n_params(&self) -> usize {
        GATES * (self.n_cells * self.n_inputs + self.n_cells * self.n_cells + self.n_cells)
    }

    fn gate_stride(&self) -> usize {
        self.n_cells * self.n_inputs + self.n_cells * self.n_cells + self.n_cells
    }
}

/// Hidden and cell state after a step; zero before the first step.
#[derive(Debug, Clone)]
pub struct LstmState {
    pub h: Vec<NodeId>,
    pub c: Vec<NodeId>,
}

impl LstmState {
    pub fn zero(spec: &LstmSpec) -> Self {
        LstmState {
            h: vec![ZERO; spec.n_cells],
            c: vec![ZERO; spec.n_cells],
        }
    }
}

/// Glorot-uniform weights per gate matrix, zero biases. Deterministic in
/// `seed`.
pub fn init_lstm(spec: &LstmSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.n_params());
    for _gate in 0..GATES {
        let lim_w = (6.0 / (spec.n_inputs + spec.n_cells) as f64).sqrt();
        for _ in 0..spec.n_cells * spec.n_inputs {
            params.push(rng.random_range(-lim_w..=lim_w));
        }
        let lim_u = (6.0 / (2 * spec.n_cells) as f64).sqrt();
        for _ in 0..spec.n_cells * spec.n_cells {
            params.push(rng.random_range(-lim_u..=lim_u));
        }
        params.extend(std::iter::repeat(0.0).take(spec.n_cells));
    }
    params
}

/// Trace one step of the cell. `params` follows [`init_lstm`]'s layout.
pub fn lstm_step(
    tape: &mut Tape,
    spec: &LstmSpec,
    params: &[NodeId],
    x: &[NodeId],
    state: &LstmState,
) -> Result<LstmState, AdnnError> {
    if params.len() != spec.n_params() {
        return Err(AdnnError::ParamCount {
            expected: spec.n_params(),
            got: params.len(),
        });
    }
    if x.len() != spec.n_inputs {
        return Err(AdnnError::InputCount {
            expected: spec.n_inputs,
            got: x.len(),
        });
    }

    // Pre-activations per gate, then the nonlinearities.
    let mut gates: Vec<Vec<NodeId>> = Vec::with_capacity(GATES);
    for gate in 0..GATES {
        let base = gate * spec.gate_stride();
        let w = &params[base..base + spec.n_cells * spec.n_inputs];
        let u = &params[base + spec.n_cells * spec.n_inputs
            ..base + spec.n_cells * spec.n_inputs + spec.n_cells * spec.n_cells];
        let b = &params[base + spec.gate_stride() - spec.n_cells..base + spec.gate_stride()];
        let mut pre = Vec::with_capacity(spec.n_cells);
        for n in 0..spec.n_cells {
            let mut z = b[n];
            for m in 0..spec.n_inputs {
                let t = tape.mul(w[n * spec.n_inputs + m], x[m]);
                z = tape.add(z, t);
            }
            for m in 0..spec.n_cells {
                let t = tape.mul(u[n * spec.n_cells + m], state.h[m]);
                z = tape.add(z, t);
            }
            pre.push(z);
        }
        gates.push(pre);
    }

    let mut h = Vec::with_capacity(spec.n_cells);
    let mut c = Vec::with_capacity(spec.n_cells);
    for n in 0..spec.n_cells {
        let i = tape.sigmoid(gates[0][n]);
        let f = tape.sigmoid(gates[1][n]);
        let g = tape.tanh(gates[2][n]);
        let o = tape.sigmoid(gates[3][n]);
        let fc = tape.mul(f, state.c[n]);
        let ig = tape.mul(i, g);
        let c_new = tape.add(fc, ig);
        let ct = tape.tanh(c_new);
        h.push(tape.mul(o, ct));
        c.push(c_new);
    }
    Ok(LstmState { h, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::params_to_leaves;
    use approx::assert_relative_eq;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Two steps of a single-cell LSTM with hand-picked weights, checked
    /// against a scalar evaluation of the gate equations. The expected
    /// values are frozen from that evaluation.
    #[test]
    fn single_cell_two_steps_match_hand_evaluation() {
        let spec = LstmSpec::new(1, 1);
        // Layout per gate: W, U, b. Gate order: i, f, g, o.
        let params = [
            0.5, 0.1, 0.0, // input gate
            0.3, 0.2, 0.1, // forget gate
            0.6, 0.3, -0.1, // candidate
            0.4, -0.1, 0.2, // output gate
        ];
        let mut tape = Tape::new();
        let p = params_to_leaves(&mut tape, &params);
        let x1 = tape.leaf(1.0);
        let s0 = LstmState::zero(&spec);
        let s1 = lstm_step(&mut tape, &spec, &p, &[x1], &s0).unwrap();
        let x2 = tape.leaf(1.0);
        let s2 = lstm_step(&mut tape, &spec, &p, &[x2], &s1).unwrap();

        // Step 1 (h = c = 0):
        let i1 = sig(0.5);
        let f1 = sig(0.3 + 0.1);
        let g1 = (0.6_f64 - 0.1).tanh();
        let o1 = sig(0.4 + 0.2);
        let c1 = f1 * 0.0 + i1 * g1;
        let h1 = o1 * c1.tanh();
        assert_relative_eq!(tape.val(s1.c[0]), c1, max_relative = 1e-15);
        assert_relative_eq!(tape.val(s1.h[0]), h1, max_relative = 1e-15);
        // Frozen from the scalar evaluation above.
        assert_relative_eq!(c1, 0.287_649_136_644_967_94, max_relative = 1e-12);
        assert_relative_eq!(h1, 0.180_764_167_543_696_62, max_relative = 1e-12);

        // Step 2:
        let i2 = sig(0.5 + 0.1 * h1);
        let f2 = sig(0.3 + 0.2 * h1 + 0.1);
        let g2 = (0.6 + 0.3 * h1 - 0.1_f64).tanh();
        let o2 = sig(0.4 - 0.1 * h1 + 0.2);
        let c2 = f2 * c1 + i2 * g2;
        let h2 = o2 * c2.tanh();
        assert_relative_eq!(tape.val(s2.c[0]), c2, max_relative = 1e-15);
        assert_relative_eq!(tape.val(s2.h[0]), h2, max_relative = 1e-15);
        assert_relative_eq!(c2, 0.490_358_590_274_412_0, max_relative = 1e-12);
        assert_relative_eq!(h2, 0.291_566_888_981_777_02, max_relative = 1e-12);
    }

    #[test]
    fn zero_state_and_zero_input_give_zero_candidate_flow() {
        // With zero biases and zero input, i = f = o = 1/2, g = 0, so the
        // state stays exactly zero.
        let spec = LstmSpec::new(2, 3);
        let mut tape = Tape::new();
        let p = params_to_leaves(&mut tape, &init_lstm(&spec, 11));
        let x = [tape.leaf(0.0), tape.leaf(0.0)];
        let s = lstm_step(&mut tape, &spec, &p, &x, &LstmState::zero(&spec)).unwrap();
        for n in 0..3 {
            assert_eq!(tape.val(s.c[n]), 0.0);
            assert_eq!(tape.val(s.h[n]), 0.0);
        }
    }

    #[test]
    fn gradient_flows_through_two_steps() {
        // d h2 / d x1 must be nonzero through the recurrent path and match a
        // finite difference.
        let spec = LstmSpec::new(1, 2);
        let params = init_lstm(&spec, 3);
        let run = |x1v: f64| -> (f64, f64) {
            let mut tape = Tape::new();
            let p = params_to_leaves(&mut tape, &params);
            let x1 = tape.leaf(x1v);
            let x2 = tape.leaf(-0.4);
            let s1 = lstm_step(&mut tape, &spec, &p, &[x1], &LstmState::zero(&spec)).unwrap();
            let s2 = lstm_step(&mut tape, &spec, &p, &[x2], &s1).unwrap();
            let y = tape.add(s2.h[0], s2.h[1]);
            let g = tape.grad_values(y)[x1.index()];
            (tape.val(y), g)
        };
        let (_, g) = run(0.8);
        let h = 1e-6;
        let (yp, _) = run(0.8 + h);
        let (ym, _) = run(0.8 - h);
        assert!(g.abs() > 1e-4);
        assert_relative_eq!(g, (yp - ym) / (2.0 * h), max_relative = 1e-7);
    }

    #[test]
    fn init_lstm_is_deterministic() {
        let spec = LstmSpec::new(2, 6);
        assert_eq!(init_lstm(&spec, 5), init_lstm(&spec, 5));
        assert_eq!(init_lstm(&spec, 5).len(), spec.n_params());
    }
}
