//! Path prediction: roll a trained parameter vector along a strain path.
//!
//! Every predictor builds its step graph once and re-evaluates it per step
//! with updated leaves. Models feed back their own previous outputs, never
//! reference data, so the traces show genuine autoregressive behaviour.

use adnn::{fnn_forward, lstm_step, LstmState, NodeId, Tape};
use datagen::ScalingSet;
use refmat::StrainPath;

use crate::config::{ArchConfig, ArchKind};
use crate::error::ArchError;
use crate::nr::BiotStepper;
use crate::potentials::aux_xi_graph;
use crate::trace::{PredictionTrace, TraceRow};

/// Predict the response along `path`, starting from the rest state.
pub fn predict_path(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    if params.len() != cfg.n_params() {
        return Err(ArchError::Config(format!(
            "expected {} parameters, got {}",
            cfg.n_params(),
            params.len()
        )));
    }
    if path.is_empty() {
        return Err(ArchError::Data("empty strain path".into()));
    }
    match cfg.kind() {
        ArchKind::FnnSigma => fnn_sigma(cfg, params, scaling, path),
        ArchKind::RnnSigma => rnn_sigma(cfg, params, scaling, path),
        ArchKind::FnnXiPsi => fnn_xipsi(cfg, params, scaling, path),
        ArchKind::RnnXiPsi => rnn_xipsi(cfg, params, scaling, path),
        ArchKind::FnnPsiPhi | ArchKind::FnnPsiPhiStar | ArchKind::FnnPsiPhiXi => {
            strong_form(cfg, params, scaling, path)
        }
    }
}

fn check_finite(value: f64) -> Result<f64, ArchError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ArchError::NonFinite {
            what: "prediction",
        })
    }
}

fn baked(tape: &mut Tape, params: &[f64]) -> Vec<NodeId> {
    params.iter().map(|&v| tape.constant(v)).collect()
}

fn fnn_sigma(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    let &ArchConfig::FnnSigma {
        rate_dependent,
        n_prec,
        ..
    } = cfg
    else {
        unreachable!()
    };
    let (spec, range) = cfg.net("stress")?;
    let mut tape = Tape::new();
    let pn = baked(&mut tape, params);
    let inputs: Vec<NodeId> = (0..spec.widths[0]).map(|_| tape.leaf(0.0)).collect();
    let sig_hat = fnn_forward(&mut tape, &spec, &pn[range], &inputs)?[0];

    let mut rows = vec![TraceRow::rest(vec![])];
    // Per visited state: scaled strain, scaled predicted stress and the
    // scaled increment leading out of it. States before the rest state are
    // zero padded.
    let mut hist: Vec<(f64, f64, f64)> =
        vec![(0.0, 0.0, scaling.dt.apply(path.steps()[0].dt))];
    for (i, step) in path.steps().iter().enumerate() {
        let mut vals = Vec::with_capacity(spec.widths[0]);
        vals.push(scaling.eps.apply(step.eps));
        for j in 0..n_prec {
            let (e, s, d) = if i >= j { hist[i - j] } else { (0.0, 0.0, 0.0) };
            vals.push(e);
            vals.push(s);
            if rate_dependent {
                vals.push(d);
            }
        }
        for (&leaf, &v) in inputs.iter().zip(&vals) {
            tape.set(leaf, v);
        }
        tape.refresh();
        let s_scaled = check_finite(tape.val(sig_hat))?;
        rows.push(TraceRow {
            t: step.t,
            eps: step.eps,
            sig_hat: scaling.sig.invert(s_scaled),
            psi_hat: None,
            diss_hat: None,
            xi_hat: vec![],
            nr_iters: None,
        });
        let lead = path
            .steps()
            .get(i + 1)
            .map_or(0.0, |s| scaling.dt.apply(s.dt));
        hist.push((scaling.eps.apply(step.eps), s_scaled, lead));
    }
    Ok(PredictionTrace { rows })
}

fn rnn_sigma(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    let &ArchConfig::RnnSigma { rate_dependent, .. } = cfg else {
        unreachable!()
    };
    let (cell, cell_range) = cfg.lstm("cell")?;
    let (head, head_range) = cfg.net("head")?;
    let mut tape = Tape::new();
    let pn = baked(&mut tape, params);
    let n_in = if rate_dependent { 2 } else { 1 };
    let x: Vec<NodeId> = (0..n_in).map(|_| tape.leaf(0.0)).collect();
    let h_prev: Vec<NodeId> = (0..cell.n_cells).map(|_| tape.leaf(0.0)).collect();
    let c_prev: Vec<NodeId> = (0..cell.n_cells).map(|_| tape.leaf(0.0)).collect();
    let carried = LstmState {
        h: h_prev.clone(),
        c: c_prev.clone(),
    };
    let state = lstm_step(&mut tape, &cell, &pn[cell_range], &x, &carried)?;
    let sig_hat = fnn_forward(&mut tape, &head, &pn[head_range], &state.h)?[0];

    let mut h = vec![0.0; cell.n_cells];
    let mut c = vec![0.0; cell.n_cells];
    let mut rows = vec![TraceRow::rest(vec![])];
    for step in path.steps() {
        tape.set(x[0], scaling.eps.apply(step.eps));
        if rate_dependent {
            tape.set(x[1], scaling.dt.apply(step.dt));
        }
        for (&leaf, &v) in h_prev.iter().zip(&h) {
            tape.set(leaf, v);
        }
        for (&leaf, &v) in c_prev.iter().zip(&c) {
            tape.set(leaf, v);
        }
        tape.refresh();
        for (slot, &node) in h.iter_mut().zip(&state.h) {
            *slot = tape.val(node);
        }
        for (slot, &node) in c.iter_mut().zip(&state.c) {
            *slot = tape.val(node);
        }
        let s_scaled = check_finite(tape.val(sig_hat))?;
        rows.push(TraceRow {
            t: step.t,
            eps: step.eps,
            sig_hat: scaling.sig.invert(s_scaled),
            psi_hat: None,
            diss_hat: None,
            xi_hat: vec![],
            nr_iters: None,
        });
    }
    Ok(PredictionTrace { rows })
}

fn fnn_xipsi(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    let &ArchConfig::FnnXiPsi { n_internal, .. } = cfg else {
        unreachable!()
    };
    let (stepper, stepper_range) = cfg.net("stepper")?;
    let (energy, energy_range) = cfg.net("energy")?;
    let mut tape = Tape::new();
    let pn = baked(&mut tape, params);
    let eps_next = tape.leaf(0.0);
    let eps_prev = tape.leaf(0.0);
    let sig_prev = tape.leaf(0.0);
    let dt = tape.leaf(1.0);
    let xi_prev: Vec<NodeId> = (0..n_internal).map(|_| tape.leaf(0.0)).collect();
    let mut step_inputs = vec![eps_next, eps_prev, sig_prev, dt];
    step_inputs.extend(&xi_prev);
    let xi_hat = fnn_forward(&mut tape, &stepper, &pn[stepper_range], &step_inputs)?;

    // The stress is the strain partial of the energy net alone, so it gets a
    // strain node separate from the stepper input.
    let eps_energy = tape.leaf(0.0);
    let mut energy_inputs = vec![eps_energy];
    energy_inputs.extend(&xi_hat);
    let psi_hat = fnn_forward(&mut tape, &energy, &pn[energy_range], &energy_inputs)?[0];
    let grads = tape.grad_trace(psi_hat, &energy_inputs);
    let mut dot_parts = Vec::with_capacity(n_internal);
    for a in 0..n_internal {
        let dxi = tape.sub(xi_hat[a], xi_prev[a]);
        let rate = tape.div(dxi, dt);
        dot_parts.push(tape.mul(grads[1 + a], rate));
    }
    let dot = tape.sum(&dot_parts);
    let diss = tape.neg(dot);

    let mut rows = vec![TraceRow::rest(vec![0.0; n_internal])];
    let mut prev = (0.0f64, 0.0f64, vec![0.0f64; n_internal]);
    for (i, step) in path.steps().iter().enumerate() {
        let eps_scaled = scaling.eps.apply(step.eps);
        tape.set(eps_next, eps_scaled);
        tape.set(eps_energy, eps_scaled);
        tape.set(eps_prev, prev.0);
        tape.set(sig_prev, prev.1);
        tape.set(dt, scaling.dt.apply(step.dt));
        for (&leaf, &v) in xi_prev.iter().zip(&prev.2) {
            tape.set(leaf, v);
        }
        tape.refresh();
        let sig_scaled = check_finite(tape.val(grads[0]))?;
        let xi_scaled: Vec<f64> = xi_hat.iter().map(|&id| tape.val(id)).collect();
        rows.push(TraceRow {
            t: step.t,
            eps: step.eps,
            sig_hat: scaling.sig.invert(sig_scaled),
            psi_hat: Some(scaling.psi.invert(tape.val(psi_hat))),
            diss_hat: Some(scaling.phi.invert(tape.val(diss))),
            xi_hat: xi_scaled.iter().map(|&x| scaling.xi.invert(x)).collect(),
            nr_iters: None,
        });
        let _ = i;
        prev = (eps_scaled, sig_scaled, xi_scaled);
    }
    Ok(PredictionTrace { rows })
}

fn rnn_xipsi(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    let &ArchConfig::RnnXiPsi {
        rate_dependent,
        n_xi,
        ..
    } = cfg
    else {
        unreachable!()
    };
    let (cell, cell_range) = cfg.lstm("cell")?;
    let (reducer, red_range) = cfg.net("reducer")?;
    let (energy, en_range) = cfg.net("energy")?;
    let mut tape = Tape::new();
    let pn = baked(&mut tape, params);

    // Initial internal variables from the rest hidden state; parameters are
    // baked in, so their values are fixed at construction.
    let h0: Vec<NodeId> = (0..cell.n_cells).map(|_| tape.leaf(0.0)).collect();
    let xi0_nodes = fnn_forward(&mut tape, &reducer, &pn[red_range.clone()], &h0)?;
    let xi0: Vec<f64> = xi0_nodes.iter().map(|&id| tape.val(id)).collect();

    let n_in = if rate_dependent { 2 } else { 1 };
    let x: Vec<NodeId> = (0..n_in).map(|_| tape.leaf(0.0)).collect();
    let h_prev: Vec<NodeId> = (0..cell.n_cells).map(|_| tape.leaf(0.0)).collect();
    let c_prev: Vec<NodeId> = (0..cell.n_cells).map(|_| tape.leaf(0.0)).collect();
    let carried = LstmState {
        h: h_prev.clone(),
        c: c_prev.clone(),
    };
    let state = lstm_step(&mut tape, &cell, &pn[cell_range], &x, &carried)?;
    let xi_n = fnn_forward(&mut tape, &reducer, &pn[red_range], &state.h)?;

    let eps_energy = tape.leaf(0.0);
    let mut energy_inputs = vec![eps_energy];
    energy_inputs.extend(&xi_n);
    let psi_hat = fnn_forward(&mut tape, &energy, &pn[en_range], &energy_inputs)?[0];
    let grads = tape.grad_trace(psi_hat, &energy_inputs);

    let dt = tape.leaf(1.0);
    let xi_before: Vec<NodeId> = (0..n_xi).map(|_| tape.leaf(0.0)).collect();
    let mut dot_parts = Vec::with_capacity(n_xi);
    for a in 0..n_xi {
        let dxi = tape.sub(xi_n[a], xi_before[a]);
        let rate = tape.div(dxi, dt);
        dot_parts.push(tape.mul(grads[1 + a], rate));
    }
    let dot = tape.sum(&dot_parts);
    let diss = tape.neg(dot);

    let mut h = vec![0.0; cell.n_cells];
    let mut c = vec![0.0; cell.n_cells];
    let mut xi_prev_vals = xi0.clone();
    let mut rows = vec![TraceRow::rest(
        xi0.iter().map(|&v| scaling.xi.invert(v)).collect(),
    )];
    for step in path.steps() {
        tape.set(x[0], scaling.eps.apply(step.eps));
        if rate_dependent {
            tape.set(x[1], scaling.dt.apply(step.dt));
        }
        tape.set(eps_energy, scaling.eps.apply(step.eps));
        tape.set(dt, scaling.dt.apply(step.dt));
        for (&leaf, &v) in h_prev.iter().zip(&h) {
            tape.set(leaf, v);
        }
        for (&leaf, &v) in c_prev.iter().zip(&c) {
            tape.set(leaf, v);
        }
        for (&leaf, &v) in xi_before.iter().zip(&xi_prev_vals) {
            tape.set(leaf, v);
        }
        tape.refresh();
        for (slot, &node) in h.iter_mut().zip(&state.h) {
            *slot = tape.val(node);
        }
        for (slot, &node) in c.iter_mut().zip(&state.c) {
            *slot = tape.val(node);
        }
        let sig_scaled = check_finite(tape.val(grads[0]))?;
        let xi_scaled: Vec<f64> = xi_n.iter().map(|&id| tape.val(id)).collect();
        rows.push(TraceRow {
            t: step.t,
            eps: step.eps,
            sig_hat: scaling.sig.invert(sig_scaled),
            psi_hat: Some(scaling.psi.invert(tape.val(psi_hat))),
            diss_hat: Some(scaling.phi.invert(tape.val(diss))),
            xi_hat: xi_scaled.iter().map(|&v| scaling.xi.invert(v)).collect(),
            nr_iters: None,
        });
        xi_prev_vals = xi_scaled;
    }
    Ok(PredictionTrace { rows })
}

fn strong_form(
    cfg: &ArchConfig,
    params: &[f64],
    scaling: &ScalingSet,
    path: &StrainPath,
) -> Result<PredictionTrace, ArchError> {
    let mut stepper = BiotStepper::new(cfg, params)?;
    let n = stepper.n_internal();
    let mut xi = vec![0.0; n];
    let mut warm = vec![0.0; n];
    let mut rows = vec![TraceRow::rest(vec![0.0; n])];
    for (i, step) in path.steps().iter().enumerate() {
        let solved = stepper.step(
            i + 1,
            scaling.eps.apply(step.eps),
            scaling.dt.apply(step.dt),
            &xi,
            &warm,
        )?;
        rows.push(TraceRow {
            t: step.t,
            eps: step.eps,
            sig_hat: scaling.sig.invert(solved.sig),
            psi_hat: Some(scaling.psi.invert(solved.psi)),
            diss_hat: Some(scaling.phi.invert(solved.diss)),
            xi_hat: solved.xi.iter().map(|&x| scaling.xi.invert(x)).collect(),
            nr_iters: Some(solved.iters as u32),
        });
        xi = solved.xi;
        warm = solved.rate;
    }
    Ok(PredictionTrace { rows })
}

/// Proposed internal-variable history of the auxiliary time net, evaluated at
/// the path times in scaled units. Only used to inspect training byproducts;
/// prediction never consults the auxiliary net.
pub fn aux_xi_history(
    cfg: &ArchConfig,
    params: &[f64],
    path: &StrainPath,
) -> Result<Vec<Vec<f64>>, ArchError> {
    let &ArchConfig::FnnPsiPhiXi { t_scale, .. } = cfg else {
        return Err(ArchError::Config(format!(
            "`{}` has no auxiliary time net",
            cfg.kind()
        )));
    };
    let (aux, aux_range) = cfg.net("aux-xi")?;
    let mut tape = Tape::new();
    let pn = baked(&mut tape, params);
    let t = tape.leaf(0.0);
    let shifted = aux_xi_graph(&mut tape, &aux, &pn[aux_range], &[t])?;
    let outputs = &shifted[0];
    let mut history = Vec::with_capacity(path.len() + 1);
    history.push(vec![0.0; outputs.len()]);
    for step in path.steps() {
        tape.set(t, step.t / t_scale);
        tape.refresh();
        history.push(outputs.iter().map(|&id| tape.val(id)).collect());
    }
    Ok(history)
}
