//! Full-batch training objectives with reverse-mode gradients.
//!
//! Every objective owns one tape per data item (a history tuple or a whole
//! sequence). The tapes are built once; an evaluation swaps the parameter
//! leaves, re-runs each tape forward and backward in parallel and reduces the
//! per-item contributions in item order, so results are independent of thread
//! scheduling and bitwise reproducible.

use adnn::{fnn_forward, lstm_step, LstmState, NodeId, Tape};
use rayon::prelude::*;

use crate::config::{ArchConfig, ArchKind};
use crate::error::ArchError;
use crate::potentials::{aux_xi_graph, dissipation_graph, energy_graph};
use crate::scaled::{ScaledSequence, ScaledTuple};

/// One named contribution to a training loss, before weighting.
#[derive(Debug, Clone)]
pub struct LossTerm {
    pub name: &'static str,
    pub weight: f64,
    pub value: f64,
}

/// Loss value split into its terms. The total is the sum of the weighted
/// terms, accumulated in term order, so the parts always add up exactly.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub terms: Vec<LossTerm>,
    pub total: f64,
}

impl LossBreakdown {
    fn new(names: &[&'static str], weights: &[f64], values: Vec<f64>) -> Self {
        let terms: Vec<LossTerm> = names
            .iter()
            .zip(weights)
            .zip(values)
            .map(|((&name, &weight), value)| LossTerm {
                name,
                weight,
                value,
            })
            .collect();
        let total = terms.iter().map(|t| t.weight * t.value).sum();
        LossBreakdown { terms, total }
    }

    pub fn term(&self, name: &str) -> Option<&LossTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// Weighted contribution of each term, in term order.
    pub fn weighted(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight * t.value).collect()
    }
}

struct Item {
    tape: Tape,
    params: Vec<NodeId>,
    terms: Vec<NodeId>,
    loss: NodeId,
    term_vals: Vec<f64>,
    grad: Vec<f64>,
}

impl Item {
    fn run(&mut self, params: &[f64]) {
        for (&leaf, &v) in self.params.iter().zip(params) {
            self.tape.set(leaf, v);
        }
        self.tape.refresh();
        for (slot, &node) in self.term_vals.iter_mut().zip(&self.terms) {
            *slot = self.tape.val(node);
        }
        let adj = self.tape.grad_values(self.loss);
        for (slot, &leaf) in self.grad.iter_mut().zip(&self.params) {
            *slot = adj[leaf.index()];
        }
    }
}

/// Tape under construction for one data item: the parameter leaves are laid
/// out first so every item shares the same parameter order.
struct ItemBuilder {
    tape: Tape,
    params: Vec<NodeId>,
}

impl ItemBuilder {
    fn new(n_params: usize) -> Self {
        let mut tape = Tape::new();
        let params = (0..n_params).map(|_| tape.leaf(0.0)).collect();
        ItemBuilder { tape, params }
    }

    fn finish(mut self, terms: Vec<NodeId>, weights: &[f64]) -> Item {
        let mut parts = Vec::new();
        for (&term, &w) in terms.iter().zip(weights) {
            if w != 0.0 {
                let wc = self.tape.constant(w);
                parts.push(self.tape.mul(wc, term));
            }
        }
        let loss = self.tape.sum(&parts);
        let n_params = self.params.len();
        let n_terms = terms.len();
        Item {
            tape: self.tape,
            params: self.params,
            terms,
            loss,
            term_vals: vec![0.0; n_terms],
            grad: vec![0.0; n_params],
        }
    }
}

/// A differentiable full-batch training loss for one architecture.
pub struct Objective {
    items: Vec<Item>,
    names: Vec<&'static str>,
    weights: Vec<f64>,
    n_params: usize,
}

impl Objective {
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn term_names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn term_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Loss and gradient of the weighted total at the given parameters.
    pub fn eval(&mut self, params: &[f64]) -> (LossBreakdown, Vec<f64>) {
        assert_eq!(
            params.len(),
            self.n_params,
            "parameter vector length mismatch"
        );
        self.items.par_iter_mut().for_each(|item| item.run(params));
        let mut grad = vec![0.0; self.n_params];
        let mut values = vec![0.0; self.names.len()];
        for item in &self.items {
            for (slot, &v) in values.iter_mut().zip(&item.term_vals) {
                *slot += v;
            }
            for (slot, &g) in grad.iter_mut().zip(&item.grad) {
                *slot += g;
            }
        }
        (LossBreakdown::new(&self.names, &self.weights, values), grad)
    }
}

fn ensure_kind(cfg: &ArchConfig, kind: ArchKind) -> Result<(), ArchError> {
    if cfg.kind() == kind {
        Ok(())
    } else {
        Err(ArchError::Config(format!(
            "objective for `{kind}` got a `{}` configuration",
            cfg.kind()
        )))
    }
}

fn non_empty<T>(items: &[T], what: &str) -> Result<(), ArchError> {
    if items.is_empty() {
        Err(ArchError::Data(format!("no {what} to train on")))
    } else {
        Ok(())
    }
}

fn check_n_internal(seqs: &[ScaledSequence], n_internal: usize) -> Result<(), ArchError> {
    for seq in seqs {
        if seq.n_internal() != n_internal {
            return Err(ArchError::Data(format!(
                "data records {} internal variables, configuration expects {n_internal}",
                seq.n_internal()
            )));
        }
        if seq.len() < 2 {
            return Err(ArchError::Data(
                "sequence needs at least one step past the rest state".into(),
            ));
        }
    }
    Ok(())
}

impl Objective {
    /// Black-box history net: mean absolute stress error over the tuples.
    pub fn fnn_sigma(cfg: &ArchConfig, tuples: &[ScaledTuple]) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnSigma)?;
        let (spec, range) = cfg.net("stress")?;
        non_empty(tuples, "history tuples")?;
        for t in tuples {
            if t.inputs.len() != spec.widths[0] {
                return Err(ArchError::Data(format!(
                    "tuple has {} inputs, the stress net expects {}",
                    t.inputs.len(),
                    spec.widths[0]
                )));
            }
        }
        let share = 1.0 / tuples.len() as f64;
        let mut items = Vec::with_capacity(tuples.len());
        for t in tuples {
            let mut b = ItemBuilder::new(cfg.n_params());
            let inputs: Vec<NodeId> = t.inputs.iter().map(|&v| b.tape.constant(v)).collect();
            let sig_hat = fnn_forward(&mut b.tape, &spec, &b.params[range.clone()], &inputs)?[0];
            let target = b.tape.constant(t.target);
            let diff = b.tape.sub(sig_hat, target);
            let err = b.tape.abs(diff);
            let share_c = b.tape.constant(share);
            let term = b.tape.mul(share_c, err);
            items.push(b.finish(vec![term], &[1.0]));
        }
        Ok(Objective {
            items,
            names: vec!["sig"],
            weights: vec![1.0],
            n_params: cfg.n_params(),
        })
    }

    /// Black-box recurrent net: stress error averaged per sequence, then over
    /// the sequences.
    pub fn rnn_sigma(cfg: &ArchConfig, seqs: &[ScaledSequence]) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::RnnSigma)?;
        let &ArchConfig::RnnSigma { rate_dependent, .. } = cfg else {
            unreachable!()
        };
        let (cell, cell_range) = cfg.lstm("cell")?;
        let (head, head_range) = cfg.net("head")?;
        non_empty(seqs, "sequences")?;
        let share = 1.0 / seqs.len() as f64;
        let mut items = Vec::with_capacity(seqs.len());
        for seq in seqs {
            if seq.len() < 2 {
                return Err(ArchError::Data(
                    "sequence needs at least one step past the rest state".into(),
                ));
            }
            let mut b = ItemBuilder::new(cfg.n_params());
            let mut state = LstmState::zero(&cell);
            let mut errs = Vec::with_capacity(seq.len() - 1);
            for n in 1..seq.len() {
                let mut x = vec![b.tape.constant(seq.eps[n])];
                if rate_dependent {
                    x.push(b.tape.constant(seq.dt[n]));
                }
                state = lstm_step(&mut b.tape, &cell, &b.params[cell_range.clone()], &x, &state)?;
                let sig_hat =
                    fnn_forward(&mut b.tape, &head, &b.params[head_range.clone()], &state.h)?[0];
                let target = b.tape.constant(seq.sig[n]);
                let diff = b.tape.sub(sig_hat, target);
                errs.push(b.tape.abs(diff));
            }
            let sum = b.tape.sum(&errs);
            let w = b.tape.constant(share / errs.len() as f64);
            let term = b.tape.mul(w, sum);
            items.push(b.finish(vec![term], &[1.0]));
        }
        Ok(Objective {
            items,
            names: vec!["sig"],
            weights: vec![1.0],
            n_params: cfg.n_params(),
        })
    }

    /// Weak-form phase one: the stepper net learns the recorded
    /// internal-variable updates. Parameters cover the stepper net only.
    pub fn fnn_xipsi_stepper(
        cfg: &ArchConfig,
        seqs: &[ScaledSequence],
        max_tuples: Option<usize>,
    ) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnXiPsi)?;
        let &ArchConfig::FnnXiPsi { n_internal, .. } = cfg else {
            unreachable!()
        };
        let (stepper, _) = cfg.net("stepper")?;
        check_n_internal(seqs, n_internal)?;
        let tuples = xi_tuples(seqs, max_tuples);
        non_empty(&tuples, "update tuples")?;
        let share = 1.0 / tuples.len() as f64;
        let ishare = 1.0 / n_internal as f64;
        let n_params = stepper.n_params();
        let mut items = Vec::with_capacity(tuples.len());
        for t in &tuples {
            let mut b = ItemBuilder::new(n_params);
            let inputs: Vec<NodeId> = t.inputs.iter().map(|&v| b.tape.constant(v)).collect();
            let xi_hat = fnn_forward(&mut b.tape, &stepper, &b.params, &inputs)?;
            let mut errs = Vec::with_capacity(n_internal);
            for (&hat, &target) in xi_hat.iter().zip(&t.xi_next) {
                let tc = b.tape.constant(target);
                let diff = b.tape.sub(hat, tc);
                errs.push(b.tape.abs(diff));
            }
            let sum = b.tape.sum(&errs);
            let w = b.tape.constant(share * ishare);
            let term = b.tape.mul(w, sum);
            items.push(b.finish(vec![term], &[1.0]));
        }
        Ok(Objective {
            items,
            names: vec!["xi"],
            weights: vec![1.0],
            n_params,
        })
    }

    /// Weak-form phase two: the energy net learns stress, energy and a
    /// nonnegative-dissipation penalty on the frozen stepper's proposals.
    /// Parameters cover the energy net only.
    pub fn fnn_xipsi_energy(
        cfg: &ArchConfig,
        seqs: &[ScaledSequence],
        max_tuples: Option<usize>,
        stepper_params: &[f64],
    ) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnXiPsi)?;
        let &ArchConfig::FnnXiPsi {
            n_internal,
            w_sig,
            w_psi,
            w_diss,
            ..
        } = cfg
        else {
            unreachable!()
        };
        let (stepper, _) = cfg.net("stepper")?;
        let (energy, _) = cfg.net("energy")?;
        if stepper_params.len() != stepper.n_params() {
            return Err(ArchError::Config(format!(
                "stepper expects {} frozen parameters, got {}",
                stepper.n_params(),
                stepper_params.len()
            )));
        }
        check_n_internal(seqs, n_internal)?;
        let tuples = xi_tuples(seqs, max_tuples);
        non_empty(&tuples, "update tuples")?;

        // The frozen stepper's proposals are plain numbers; evaluate them once
        // on a scratch tape.
        let mut scratch = Tape::new();
        let frozen: Vec<NodeId> = stepper_params
            .iter()
            .map(|&v| scratch.constant(v))
            .collect();
        let in_leaves: Vec<NodeId> = (0..stepper.widths[0]).map(|_| scratch.leaf(0.0)).collect();
        let outs = fnn_forward(&mut scratch, &stepper, &frozen, &in_leaves)?;
        let proposals: Vec<Vec<f64>> = tuples
            .iter()
            .map(|t| {
                for (&leaf, &v) in in_leaves.iter().zip(&t.inputs) {
                    scratch.set(leaf, v);
                }
                scratch.refresh();
                outs.iter().map(|&o| scratch.val(o)).collect()
            })
            .collect();

        let share = 1.0 / tuples.len() as f64;
        let n_params = energy.n_params();
        let mut items = Vec::with_capacity(tuples.len());
        for (t, xi_hat) in tuples.iter().zip(&proposals) {
            let mut b = ItemBuilder::new(n_params);
            let eps_in = b.tape.leaf(t.eps_next);
            let xi_in: Vec<NodeId> = xi_hat.iter().map(|&v| b.tape.leaf(v)).collect();
            let mut inputs = vec![eps_in];
            inputs.extend(&xi_in);
            let psi_hat = fnn_forward(&mut b.tape, &energy, &b.params, &inputs)?[0];
            let grads = b.tape.grad_trace(psi_hat, &inputs);

            let sig_c = b.tape.constant(t.sig_next);
            let sig_diff = b.tape.sub(grads[0], sig_c);
            let sig_err = b.tape.abs(sig_diff);
            let share_c = b.tape.constant(share);
            let term_sig = b.tape.mul(share_c, sig_err);

            let psi_c = b.tape.constant(t.psi_next);
            let psi_diff = b.tape.sub(psi_hat, psi_c);
            let psi_err = b.tape.abs(psi_diff);
            let term_psi = b.tape.mul(share_c, psi_err);

            // Penalty on the negative part of the dissipation implied by the
            // frozen proposal: relu(sum_a dPsi/dXi_a * rate_a), summed over
            // the tuples without averaging.
            let mut dot_parts = Vec::with_capacity(n_internal);
            for a in 0..n_internal {
                let rate = b.tape.constant((xi_hat[a] - t.xi_prev[a]) / t.dt);
                dot_parts.push(b.tape.mul(grads[1 + a], rate));
            }
            let dot = b.tape.sum(&dot_parts);
            let term_diss = b.tape.relu(dot);

            items.push(b.finish(
                vec![term_sig, term_psi, term_diss],
                &[w_sig, w_psi, w_diss],
            ));
        }
        Ok(Objective {
            items,
            names: vec!["sig", "psi", "diss"],
            weights: vec![w_sig, w_psi, w_diss],
            n_params,
        })
    }

    /// Weak-form recurrent model: stress from the differentiated energy head
    /// over LSTM-invented internal variables, with a dissipation penalty.
    pub fn rnn_xipsi(cfg: &ArchConfig, seqs: &[ScaledSequence]) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::RnnXiPsi)?;
        let &ArchConfig::RnnXiPsi {
            rate_dependent,
            n_xi,
            w_sig,
            w_diss,
            ..
        } = cfg
        else {
            unreachable!()
        };
        let (cell, cell_range) = cfg.lstm("cell")?;
        let (reducer, red_range) = cfg.net("reducer")?;
        let (energy, en_range) = cfg.net("energy")?;
        non_empty(seqs, "sequences")?;
        let share = 1.0 / seqs.len() as f64;
        let mut items = Vec::with_capacity(seqs.len());
        for seq in seqs {
            if seq.len() < 2 {
                return Err(ArchError::Data(
                    "sequence needs at least one step past the rest state".into(),
                ));
            }
            let mut b = ItemBuilder::new(cfg.n_params());
            // Predecessor of the first step: the reducer on the rest hidden
            // state.
            let h0: Vec<NodeId> = (0..cell.n_cells).map(|_| b.tape.leaf(0.0)).collect();
            let mut xi_prev =
                fnn_forward(&mut b.tape, &reducer, &b.params[red_range.clone()], &h0)?;
            let mut state = LstmState::zero(&cell);
            let mut sig_errs = Vec::with_capacity(seq.len() - 1);
            let mut penalties = Vec::with_capacity(seq.len() - 1);
            for n in 1..seq.len() {
                let mut x = vec![b.tape.constant(seq.eps[n])];
                if rate_dependent {
                    x.push(b.tape.constant(seq.dt[n]));
                }
                state = lstm_step(&mut b.tape, &cell, &b.params[cell_range.clone()], &x, &state)?;
                let xi_n = fnn_forward(
                    &mut b.tape,
                    &reducer,
                    &b.params[red_range.clone()],
                    &state.h,
                )?;
                // The stress must be the strain partial of the energy head
                // alone, so the head gets its own strain node.
                let eps_en = b.tape.leaf(seq.eps[n]);
                let mut en_inputs = vec![eps_en];
                en_inputs.extend(&xi_n);
                let psi =
                    fnn_forward(&mut b.tape, &energy, &b.params[en_range.clone()], &en_inputs)?[0];
                let grads = b.tape.grad_trace(psi, &en_inputs);

                let sig_c = b.tape.constant(seq.sig[n]);
                let diff = b.tape.sub(grads[0], sig_c);
                sig_errs.push(b.tape.abs(diff));

                let inv_dt = b.tape.constant(1.0 / seq.dt[n]);
                let mut dot_parts = Vec::with_capacity(n_xi);
                for a in 0..n_xi {
                    let dxi = b.tape.sub(xi_n[a], xi_prev[a]);
                    let rate = b.tape.mul(dxi, inv_dt);
                    dot_parts.push(b.tape.mul(grads[1 + a], rate));
                }
                let dot = b.tape.sum(&dot_parts);
                penalties.push(b.tape.relu(dot));
                xi_prev = xi_n;
            }
            let w = b.tape.constant(share / sig_errs.len() as f64);
            let sig_sum = b.tape.sum(&sig_errs);
            let term_sig = b.tape.mul(w, sig_sum);
            let pen_sum = b.tape.sum(&penalties);
            let term_diss = b.tape.mul(w, pen_sum);
            items.push(b.finish(vec![term_sig, term_diss], &[w_sig, w_diss]));
        }
        Ok(Objective {
            items,
            names: vec!["sig", "diss"],
            weights: vec![w_sig, w_diss],
            n_params: cfg.n_params(),
        })
    }

    /// Strong form, primal potential: stress error plus the residual of the
    /// evolution equation at the recorded states and rates.
    pub fn fnn_psiphi(
        cfg: &ArchConfig,
        seqs: &[ScaledSequence],
        max_tuples: Option<usize>,
    ) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnPsiPhi)?;
        let &ArchConfig::FnnPsiPhi {
            n_internal,
            w_sig,
            w_biot,
            ..
        } = cfg
        else {
            unreachable!()
        };
        let specs = StrongSpecs::from_config(cfg)?;
        check_n_internal(seqs, n_internal)?;
        let tuples = strong_tuples(seqs, max_tuples);
        non_empty(&tuples, "state tuples")?;
        let share = 1.0 / tuples.len() as f64;
        let ishare = 1.0 / n_internal as f64;
        let mut items = Vec::with_capacity(tuples.len());
        for t in &tuples {
            let mut b = ItemBuilder::new(cfg.n_params());
            let (eps, xi) = t.state_leaves(&mut b.tape);
            let gate: Vec<NodeId> = t.rate.iter().map(|&v| b.tape.leaf(v)).collect();
            let e = specs.energy_graph(&mut b, eps, &xi)?;
            let d = specs.dissipation_graph(&mut b, &gate, eps, &xi)?;

            let term_sig = stress_term(&mut b.tape, e.sig, t.sig, share);
            let mut residuals = Vec::with_capacity(n_internal);
            for (&tau, &flux) in e.tau.iter().zip(&d.flux) {
                let diff = b.tape.sub(tau, flux);
                residuals.push(b.tape.abs(diff));
            }
            let res_sum = b.tape.sum(&residuals);
            let w = b.tape.constant(share * ishare);
            let term_biot = b.tape.mul(w, res_sum);
            items.push(b.finish(vec![term_sig, term_biot], &[w_sig, w_biot]));
        }
        Ok(Objective {
            items,
            names: vec!["sig", "biot"],
            weights: vec![w_sig, w_biot],
            n_params: cfg.n_params(),
        })
    }

    /// Strong form, dual potential: stress error plus the error of the
    /// force-driven rates against the recorded rates.
    pub fn fnn_psiphistar(
        cfg: &ArchConfig,
        seqs: &[ScaledSequence],
        max_tuples: Option<usize>,
    ) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnPsiPhiStar)?;
        let &ArchConfig::FnnPsiPhiStar {
            n_internal,
            w_sig,
            w_xidot,
            ..
        } = cfg
        else {
            unreachable!()
        };
        let specs = StrongSpecs::from_config(cfg)?;
        check_n_internal(seqs, n_internal)?;
        let tuples = strong_tuples(seqs, max_tuples);
        non_empty(&tuples, "state tuples")?;
        let share = 1.0 / tuples.len() as f64;
        let ishare = 1.0 / n_internal as f64;
        let mut items = Vec::with_capacity(tuples.len());
        for t in &tuples {
            let mut b = ItemBuilder::new(cfg.n_params());
            let (eps, xi) = t.state_leaves(&mut b.tape);
            let e = specs.energy_graph(&mut b, eps, &xi)?;
            let d = specs.dissipation_graph(&mut b, &e.tau, eps, &xi)?;

            let term_sig = stress_term(&mut b.tape, e.sig, t.sig, share);
            let mut errs = Vec::with_capacity(n_internal);
            for (&flux, &rate) in d.flux.iter().zip(&t.rate) {
                let rc = b.tape.constant(rate);
                let diff = b.tape.sub(flux, rc);
                errs.push(b.tape.abs(diff));
            }
            let err_sum = b.tape.sum(&errs);
            let w = b.tape.constant(share * ishare);
            let term_rate = b.tape.mul(w, err_sum);
            items.push(b.finish(vec![term_sig, term_rate], &[w_sig, w_xidot]));
        }
        Ok(Objective {
            items,
            names: vec!["sig", "xidot"],
            weights: vec![w_sig, w_xidot],
            n_params: cfg.n_params(),
        })
    }

    /// Strong form without recorded internal variables: an auxiliary net
    /// proposes the internal-variable history from time alone, trained
    /// jointly with the potentials and kept small by an absolute-value
    /// penalty. Expects the dedicated smooth-path data.
    pub fn fnn_psiphixi(cfg: &ArchConfig, seqs: &[ScaledSequence]) -> Result<Objective, ArchError> {
        ensure_kind(cfg, ArchKind::FnnPsiPhiXi)?;
        let &ArchConfig::FnnPsiPhiXi {
            n_internal,
            w_sig,
            w_biot,
            w_xiabs,
            t_scale,
            ..
        } = cfg
        else {
            unreachable!()
        };
        let specs = StrongSpecs::from_config(cfg)?;
        let (aux, aux_range) = cfg.net("aux-xi")?;
        non_empty(seqs, "sequences")?;
        let n_steps: usize = seqs.iter().map(|s| s.len().saturating_sub(1)).sum();
        if n_steps == 0 {
            return Err(ArchError::Data(
                "sequences need at least one step past the rest state".into(),
            ));
        }
        let share = 1.0 / n_steps as f64;
        let ishare = 1.0 / n_internal as f64;
        let mut items = Vec::with_capacity(n_steps);
        for seq in seqs {
            for n in 1..seq.len() {
                let mut b = ItemBuilder::new(cfg.n_params());
                let t_now = b.tape.leaf(seq.t[n] / t_scale);
                let t_before = b.tape.leaf(seq.t[n - 1] / t_scale);
                let proposals = aux_xi_graph(
                    &mut b.tape,
                    &aux,
                    &b.params[aux_range.clone()],
                    &[t_now, t_before],
                )?;
                let xi_n = proposals[0].clone();
                let dt_c = b.tape.constant(seq.dt[n]);
                let gate: Vec<NodeId> = xi_n
                    .iter()
                    .zip(&proposals[1])
                    .map(|(&now, &before)| {
                        let dxi = b.tape.sub(now, before);
                        b.tape.div(dxi, dt_c)
                    })
                    .collect();
                let eps = b.tape.leaf(seq.eps[n]);
                let e = specs.energy_graph(&mut b, eps, &xi_n)?;
                let d = specs.dissipation_graph(&mut b, &gate, eps, &xi_n)?;

                let term_sig = stress_term(&mut b.tape, e.sig, seq.sig[n], share);
                let mut residuals = Vec::with_capacity(n_internal);
                for (&tau, &flux) in e.tau.iter().zip(&d.flux) {
                    let diff = b.tape.sub(tau, flux);
                    residuals.push(b.tape.abs(diff));
                }
                let res_sum = b.tape.sum(&residuals);
                let w_res = b.tape.constant(share * ishare);
                let term_biot = b.tape.mul(w_res, res_sum);

                let mut mags = Vec::with_capacity(n_internal);
                for &x in &xi_n {
                    mags.push(b.tape.abs(x));
                }
                let mag_sum = b.tape.sum(&mags);
                let share_c = b.tape.constant(share);
                let term_xiabs = b.tape.mul(share_c, mag_sum);

                items.push(b.finish(
                    vec![term_sig, term_biot, term_xiabs],
                    &[w_sig, w_biot, w_xiabs],
                ));
            }
        }
        Ok(Objective {
            items,
            names: vec!["sig", "biot", "xiabs"],
            weights: vec![w_sig, w_biot, w_xiabs],
            n_params: cfg.n_params(),
        })
    }
}

fn stress_term(tape: &mut Tape, sig_hat: NodeId, sig: f64, share: f64) -> NodeId {
    let sig_c = tape.constant(sig);
    let diff = tape.sub(sig_hat, sig_c);
    let err = tape.abs(diff);
    let share_c = tape.constant(share);
    tape.mul(share_c, err)
}

/// Energy, convex and positive sub-net specs with their parameter slices.
struct StrongSpecs {
    energy: (adnn::NetSpec, std::ops::Range<usize>),
    convex: (adnn::NetSpec, std::ops::Range<usize>),
    positive: (adnn::NetSpec, std::ops::Range<usize>),
}

impl StrongSpecs {
    fn from_config(cfg: &ArchConfig) -> Result<Self, ArchError> {
        Ok(StrongSpecs {
            energy: cfg.net("energy")?,
            convex: cfg.net("dissipation-convex")?,
            positive: cfg.net("dissipation-positive")?,
        })
    }

    fn energy_graph(
        &self,
        b: &mut ItemBuilder,
        eps: NodeId,
        xi: &[NodeId],
    ) -> Result<crate::potentials::EnergyGraph, ArchError> {
        energy_graph(
            &mut b.tape,
            &self.energy.0,
            &b.params[self.energy.1.clone()],
            eps,
            xi,
        )
    }

    fn dissipation_graph(
        &self,
        b: &mut ItemBuilder,
        gate: &[NodeId],
        eps: NodeId,
        xi: &[NodeId],
    ) -> Result<crate::potentials::DissipationGraph, ArchError> {
        dissipation_graph(
            &mut b.tape,
            &self.convex.0,
            &self.positive.0,
            &b.params[self.convex.1.clone()],
            &b.params[self.positive.1.clone()],
            gate,
            eps,
            xi,
        )
    }
}

/// One weak-form training record: stepper inputs plus everything the energy
/// phase needs about the step.
struct XiTuple {
    inputs: Vec<f64>,
    xi_next: Vec<f64>,
    xi_prev: Vec<f64>,
    sig_next: f64,
    psi_next: f64,
    eps_next: f64,
    dt: f64,
}

fn xi_tuples(seqs: &[ScaledSequence], cap: Option<usize>) -> Vec<XiTuple> {
    let mut out = Vec::new();
    for seq in seqs {
        for n in 1..seq.len() {
            if cap.is_some_and(|c| out.len() >= c) {
                return out;
            }
            let mut inputs = vec![seq.eps[n], seq.eps[n - 1], seq.sig[n - 1], seq.dt[n]];
            inputs.extend(&seq.xi[n - 1]);
            out.push(XiTuple {
                inputs,
                xi_next: seq.xi[n].clone(),
                xi_prev: seq.xi[n - 1].clone(),
                sig_next: seq.sig[n],
                psi_next: seq.psi[n],
                eps_next: seq.eps[n],
                dt: seq.dt[n],
            });
        }
    }
    out
}

/// One strong-form training record: the new state with the rate that led to
/// it.
struct StrongTuple {
    eps: f64,
    sig: f64,
    xi: Vec<f64>,
    rate: Vec<f64>,
}

impl StrongTuple {
    fn state_leaves(&self, tape: &mut Tape) -> (NodeId, Vec<NodeId>) {
        let eps = tape.leaf(self.eps);
        let xi = self.xi.iter().map(|&v| tape.leaf(v)).collect();
        (eps, xi)
    }
}

fn strong_tuples(seqs: &[ScaledSequence], cap: Option<usize>) -> Vec<StrongTuple> {
    let mut out = Vec::new();
    for seq in seqs {
        for n in 1..seq.len() {
            if cap.is_some_and(|c| out.len() >= c) {
                return out;
            }
            let rate = seq.xi[n]
                .iter()
                .zip(&seq.xi[n - 1])
                .map(|(&x1, &x0)| (x1 - x0) / seq.dt[n])
                .collect();
            out.push(StrongTuple {
                eps: seq.eps[n],
                sig: seq.sig[n],
                xi: seq.xi[n].clone(),
                rate,
            });
        }
    }
    out
}
