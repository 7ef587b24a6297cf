//! Graph builders shared by the potential-based models.
//!
//! All builders trace onto an existing tape and return node ids, so the same
//! construction serves training objectives (inputs are data constants) and
//! prediction (inputs are leaves updated per step). Inputs that are
//! differentiated against must be dedicated nodes: the builders create their
//! own zero-point nodes with [`Tape::leaf`] because `Tape::constant(0.0)`
//! returns the shared zero constant, which other parts of the graph may use.

use adnn::{fnn_forward, icnn_forward, positive_net_forward, NetSpec, NodeId, Tape};

use crate::error::ArchError;

/// Corrected free energy with its derived stress and internal forces.
#[derive(Debug, Clone)]
pub struct EnergyGraph {
    pub psi: NodeId,
    /// Partial derivative of `psi` with respect to the strain input.
    pub sig: NodeId,
    /// Negative partial derivatives with respect to the internal variables.
    pub tau: Vec<NodeId>,
}

/// Free-energy net with the zero-state normalization built into the graph:
///
/// `psi = psiNN(eps, xi) - psiNN(0, 0) - d psiNN/d eps(0, 0) * eps
///        - sum_a d psiNN/d xi_a(0, 0) * xi_a`
///
/// so energy, stress and internal forces vanish in the unloaded state. The
/// subtraction of two bitwise-identical evaluations makes the zeros exact.
pub fn energy_graph(
    tape: &mut Tape,
    spec: &NetSpec,
    params: &[NodeId],
    eps: NodeId,
    xi: &[NodeId],
) -> Result<EnergyGraph, ArchError> {
    let eps0 = tape.leaf(0.0);
    let xi0: Vec<NodeId> = xi.iter().map(|_| tape.leaf(0.0)).collect();
    let mut inputs0 = vec![eps0];
    inputs0.extend(&xi0);
    let psi_nn0 = fnn_forward(tape, spec, params, &inputs0)?[0];
    let grad0 = tape.grad_trace(psi_nn0, &inputs0);

    let mut inputs = vec![eps];
    inputs.extend(xi);
    let psi_nn = fnn_forward(tape, spec, params, &inputs)?[0];

    let mut psi = tape.sub(psi_nn, psi_nn0);
    for (g0, &input) in grad0.iter().zip(&inputs) {
        let lin = tape.mul(*g0, input);
        psi = tape.sub(psi, lin);
    }

    // The derivatives of the correction are the raw-net derivatives minus the
    // zero-point ones. Building them as that difference (rather than tracing
    // the corrected node) subtracts two identically-evaluated sweeps, so the
    // zeros at the rest state are exact.
    let grads_nn = tape.grad_trace(psi_nn, &inputs);
    let sig = tape.sub(grads_nn[0], grad0[0]);
    let tau = grads_nn[1..]
        .iter()
        .zip(&grad0[1..])
        .map(|(&g, &g0)| {
            let shifted = tape.sub(g, g0);
            tape.neg(shifted)
        })
        .collect();
    Ok(EnergyGraph { psi, sig, tau })
}

/// Corrected dissipation potential (or its dual) with its flux.
#[derive(Debug, Clone)]
pub struct DissipationGraph {
    pub phi: NodeId,
    /// Partial derivative of `phi` with respect to each gate entry at fixed
    /// strain and internal variables: the internal forces for the primal
    /// potential, the internal-variable rates for the dual one.
    pub flux: Vec<NodeId>,
}

/// Multiplicative convex-times-positive potential with the zero-gate
/// normalization `phi(0; eps, xi) = 0` and `flux(0; eps, xi) = 0`:
///
/// `phi = [con(gate) - con(0) - grad con(0) . gate] * pos(eps, xi)`
///
/// The gate is the convex argument: internal-variable rates for the primal
/// potential, internal forces for the dual one. Convexity of `con` makes the
/// gate-flux product nonnegative, so any state evolution driven by the flux
/// dissipates.
pub fn dissipation_graph(
    tape: &mut Tape,
    convex: &NetSpec,
    positive: &NetSpec,
    convex_params: &[NodeId],
    positive_params: &[NodeId],
    gate: &[NodeId],
    eps: NodeId,
    xi: &[NodeId],
) -> Result<DissipationGraph, ArchError> {
    let gate0: Vec<NodeId> = gate.iter().map(|_| tape.leaf(0.0)).collect();
    let con0 = icnn_forward(tape, convex, convex_params, &gate0)?[0];
    let grad_con0 = tape.grad_trace(con0, &gate0);

    let con = icnn_forward(tape, convex, convex_params, gate)?[0];
    let grad_con = tape.grad_trace(con, gate);

    let mut pos_inputs = vec![eps];
    pos_inputs.extend(xi);
    let pos = positive_net_forward(tape, positive, positive_params, &pos_inputs)?[0];

    let mut corr = tape.sub(con, con0);
    for (g0, &g) in grad_con0.iter().zip(gate) {
        let lin = tape.mul(*g0, g);
        corr = tape.sub(corr, lin);
    }
    let phi = tape.mul(corr, pos);

    let flux = grad_con
        .iter()
        .zip(&grad_con0)
        .map(|(&g, &g0)| {
            let slope = tape.sub(g, g0);
            tape.mul(slope, pos)
        })
        .collect();
    Ok(DissipationGraph { phi, flux })
}

/// Auxiliary time net with its zero-time shift: `xi(t) = raw(t) - raw(0)`,
/// so the proposed internal variables start at zero. `times` are already
/// divided by the configured time scale; one shifted output vector is
/// returned per time node.
pub fn aux_xi_graph(
    tape: &mut Tape,
    spec: &NetSpec,
    params: &[NodeId],
    times: &[NodeId],
) -> Result<Vec<Vec<NodeId>>, ArchError> {
    let t0 = tape.leaf(0.0);
    let raw0 = fnn_forward(tape, spec, params, &[t0])?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let raw = fnn_forward(tape, spec, params, &[t])?;
        out.push(
            raw.iter()
                .zip(&raw0)
                .map(|(&r, &r0)| tape.sub(r, r0))
                .collect(),
        );
    }
    Ok(out)
}
