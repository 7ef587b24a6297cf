//! Implicit time stepping for the strong-form models.
//!
//! Each step solves the discretized evolution equation for the scaled
//! internal-variable rates `z` with a damped Newton iteration. The new state
//! `xi = xi_prev + dt * z` lives on the tape, so the residual Jacobian picks
//! up the state dependence of both potentials automatically.

use adnn::{NodeId, Tape};
use nalgebra::{DMatrix, DVector};

use crate::config::{ArchConfig, ArchKind};
use crate::error::ArchError;
use crate::potentials::{dissipation_graph, energy_graph};

/// Convergence threshold on the scaled residual, maximum over the internal
/// variables.
pub const NR_TOLERANCE: f64 = 1e-8;
pub const NR_MAX_ITERS: usize = 50;
pub const NR_MAX_HALVINGS: usize = 8;

/// One converged implicit step, all quantities in scaled units.
#[derive(Debug, Clone)]
pub struct BiotStep {
    pub xi: Vec<f64>,
    /// Rates of the internal variables: the Newton unknowns.
    pub rate: Vec<f64>,
    pub sig: f64,
    pub psi: f64,
    pub phi: f64,
    /// Gate-flux product of the dissipation potential; nonnegative by the
    /// convexity of the gate part.
    pub diss: f64,
    pub iters: usize,
}

/// Reusable implicit stepper for one parameter vector. The same graph is
/// re-evaluated for every step with updated leaves.
pub struct BiotStepper {
    tape: Tape,
    eps: NodeId,
    dt: NodeId,
    xi_prev: Vec<NodeId>,
    z: Vec<NodeId>,
    xi_new: Vec<NodeId>,
    residual: Vec<NodeId>,
    sig: NodeId,
    psi: NodeId,
    phi: NodeId,
    diss: NodeId,
}

impl BiotStepper {
    /// Build the stepper graph. Primal configurations drive the rates through
    /// the force balance `tau = d phi/d rate`, the dual one through the rate
    /// balance `rate = d phi*/d tau`.
    pub fn new(cfg: &ArchConfig, params: &[f64]) -> Result<Self, ArchError> {
        let dual = match cfg.kind() {
            ArchKind::FnnPsiPhi | ArchKind::FnnPsiPhiXi => false,
            ArchKind::FnnPsiPhiStar => true,
            other => {
                return Err(ArchError::Config(format!(
                    "`{other}` has no implicit evolution step"
                )))
            }
        };
        if params.len() != cfg.n_params() {
            return Err(ArchError::Config(format!(
                "expected {} parameters, got {}",
                cfg.n_params(),
                params.len()
            )));
        }
        let n = cfg.n_xi_out();
        let (energy, er) = cfg.net("energy")?;
        let (convex, cr) = cfg.net("dissipation-convex")?;
        let (positive, pr) = cfg.net("dissipation-positive")?;

        let mut tape = Tape::new();
        let pn: Vec<NodeId> = params.iter().map(|&v| tape.constant(v)).collect();
        let eps = tape.leaf(0.0);
        let dt = tape.leaf(1.0);
        let xi_prev: Vec<NodeId> = (0..n).map(|_| tape.leaf(0.0)).collect();
        let z: Vec<NodeId> = (0..n).map(|_| tape.leaf(0.0)).collect();
        let xi_new: Vec<NodeId> = xi_prev
            .iter()
            .zip(&z)
            .map(|(&xp, &zi)| {
                let dxi = tape.mul(dt, zi);
                tape.add(xp, dxi)
            })
            .collect();

        let e = energy_graph(&mut tape, &energy, &pn[er], eps, &xi_new)?;
        let gate: Vec<NodeId> = if dual { e.tau.clone() } else { z.clone() };
        let d = dissipation_graph(
            &mut tape,
            &convex,
            &positive,
            &pn[cr],
            &pn[pr],
            &gate,
            eps,
            &xi_new,
        )?;
        let residual: Vec<NodeId> = if dual {
            z.iter()
                .zip(&d.flux)
                .map(|(&zi, &f)| tape.sub(zi, f))
                .collect()
        } else {
            e.tau
                .iter()
                .zip(&d.flux)
                .map(|(&t, &f)| tape.sub(t, f))
                .collect()
        };
        let diss_parts: Vec<NodeId> = gate
            .iter()
            .zip(&d.flux)
            .map(|(&g, &f)| tape.mul(g, f))
            .collect();
        let diss = tape.sum(&diss_parts);

        Ok(BiotStepper {
            tape,
            eps,
            dt,
            xi_prev,
            z,
            xi_new,
            residual,
            sig: e.sig,
            psi: e.psi,
            phi: d.phi,
            diss,
        })
    }

    pub fn n_internal(&self) -> usize {
        self.z.len()
    }

    /// Solve one implicit step, warm-started at `warm_rate`. All arguments
    /// and results are in scaled units; `step_index` only labels divergence
    /// errors.
    pub fn step(
        &mut self,
        step_index: usize,
        eps: f64,
        dt: f64,
        xi_prev: &[f64],
        warm_rate: &[f64],
    ) -> Result<BiotStep, ArchError> {
        let n = self.z.len();
        assert_eq!(xi_prev.len(), n, "internal-variable count mismatch");
        assert_eq!(warm_rate.len(), n, "warm-start length mismatch");
        if !(dt > 0.0) {
            return Err(ArchError::Config(format!(
                "implicit step needs a positive increment, got {dt}"
            )));
        }
        self.tape.set(self.eps, eps);
        self.tape.set(self.dt, dt);
        for (&leaf, &v) in self.xi_prev.iter().zip(xi_prev) {
            self.tape.set(leaf, v);
        }

        let mut z = warm_rate.to_vec();
        let (mut res_norm, mut res_merit) = self.residual_at(&z)?;
        let mut iters = 0;
        while res_norm > NR_TOLERANCE {
            if iters == NR_MAX_ITERS {
                return Err(ArchError::NrDivergence {
                    step: step_index,
                    iterations: iters,
                    halvings: 0,
                    residual: res_norm,
                });
            }
            let r: Vec<f64> = self.residual.iter().map(|&id| self.tape.val(id)).collect();
            let mut jac = DMatrix::zeros(n, n);
            for a in 0..n {
                let adj = self.tape.grad_values(self.residual[a]);
                for b in 0..n {
                    jac[(a, b)] = adj[self.z[b].index()];
                }
            }
            let rhs = DVector::from_iterator(n, r.iter().map(|&v| -v));
            let Some(dz) = jac.lu().solve(&rhs) else {
                return Err(ArchError::NrDivergence {
                    step: step_index,
                    iterations: iters,
                    halvings: 0,
                    residual: res_norm,
                });
            };
            // Backtrack on the squared 2-norm; the max-norm used for
            // convergence is kinked where the largest component changes and
            // can refuse progress that the smooth merit accepts.
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..=NR_MAX_HALVINGS {
                let candidate: Vec<f64> = z
                    .iter()
                    .zip(dz.iter())
                    .map(|(&zi, &d)| zi + scale * d)
                    .collect();
                let (candidate_norm, candidate_merit) = self.residual_at(&candidate)?;
                if candidate_merit < res_merit {
                    z = candidate;
                    res_norm = candidate_norm;
                    res_merit = candidate_merit;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                return Err(ArchError::NrDivergence {
                    step: step_index,
                    iterations: iters + 1,
                    halvings: NR_MAX_HALVINGS,
                    residual: res_norm,
                });
            }
            iters += 1;
        }

        // The tape holds the last accepted rates.
        Ok(BiotStep {
            xi: self.xi_new.iter().map(|&id| self.tape.val(id)).collect(),
            rate: z,
            sig: self.tape.val(self.sig),
            psi: self.tape.val(self.psi),
            phi: self.tape.val(self.phi),
            diss: self.tape.val(self.diss),
            iters,
        })
    }

    /// Maximum-norm and squared 2-norm of the residual at the given rates.
    fn residual_at(&mut self, z: &[f64]) -> Result<(f64, f64), ArchError> {
        for (&leaf, &v) in self.z.iter().zip(z) {
            self.tape.set(leaf, v);
        }
        self.tape.refresh();
        let mut norm = 0.0f64;
        let mut merit = 0.0f64;
        for &id in &self.residual {
            let v = self.tape.val(id);
            if !v.is_finite() {
                return Err(ArchError::NonFinite {
                    what: "implicit-step residual",
                });
            }
            norm = norm.max(v.abs());
            merit += v * v;
        }
        Ok((norm, merit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use refmat::MaterialId;

    fn primal_stepper(seed: u64) -> (ArchConfig, Vec<f64>, BiotStepper) {
        let cfg = preset(ArchKind::FnnPsiPhi, MaterialId::V2);
        let params = cfg.init_params(seed);
        let stepper = BiotStepper::new(&cfg, &params).unwrap();
        (cfg, params, stepper)
    }

    #[test]
    fn random_weight_step_converges_and_dissipates() {
        for seed in 0..20 {
            let (_, _, mut stepper) = primal_stepper(seed);
            let n = stepper.n_internal();
            let mut xi = vec![0.0; n];
            let mut warm = vec![0.0; n];
            for (k, eps) in [0.2, 0.5, 0.9, 0.4].into_iter().enumerate() {
                let step = stepper.step(k + 1, eps, 0.5, &xi, &warm).unwrap();
                assert!(step.iters <= NR_MAX_ITERS, "seed {seed}");
                assert!(
                    step.diss >= -1e-14,
                    "seed {seed}: dissipation {}",
                    step.diss
                );
                for (&x, (&xp, &r)) in step.xi.iter().zip(xi.iter().zip(&step.rate)) {
                    assert!((x - (xp + 0.5 * r)).abs() < 1e-12, "seed {seed}");
                }
                xi = step.xi.clone();
                warm = step.rate.clone();
            }
        }
    }

    #[test]
    fn dual_stepper_converges_and_dissipates() {
        // Untrained dual potentials can put the rate balance outside Newton's
        // reach for some weights, so divergence is tolerated as long as it is
        // reported and the converged majority dissipates.
        let cfg = preset(ArchKind::FnnPsiPhiStar, MaterialId::P2);
        let mut converged = 0;
        for seed in 0..10 {
            let params = cfg.init_params(seed);
            let mut stepper = BiotStepper::new(&cfg, &params).unwrap();
            let n = stepper.n_internal();
            match stepper.step(1, 0.4, 0.2, &vec![0.0; n], &vec![0.0; n]) {
                Ok(step) => {
                    converged += 1;
                    assert!(step.diss >= -1e-14, "seed {seed}: dissipation {}", step.diss);
                    assert!(step.sig.is_finite(), "seed {seed}");
                }
                Err(ArchError::NrDivergence { .. }) => {}
                Err(other) => panic!("seed {seed}: {other}"),
            }
        }
        assert!(converged >= 7, "only {converged}/10 random duals converged");
    }

    #[test]
    fn converged_residual_is_small() {
        // Re-evaluating the converged rates must reproduce a residual below
        // the tolerance; checks the tape state after a step.
        let (_, _, mut stepper) = primal_stepper(3);
        let n = stepper.n_internal();
        let step = stepper.step(1, 0.6, 0.4, &vec![0.0; n], &vec![0.0; n]).unwrap();
        let (norm, _) = stepper.residual_at(&step.rate).unwrap();
        assert!(norm <= NR_TOLERANCE, "residual {norm}");
    }

    #[test]
    fn steps_are_bitwise_reproducible() {
        let (_, _, mut a) = primal_stepper(5);
        let (_, _, mut b) = primal_stepper(5);
        let n = a.n_internal();
        let sa = a.step(1, 0.8, 0.25, &vec![0.1; n], &vec![0.0; n]).unwrap();
        let sb = b.step(1, 0.8, 0.25, &vec![0.1; n], &vec![0.0; n]).unwrap();
        assert_eq!(sa.xi, sb.xi);
        assert_eq!(sa.sig, sb.sig);
        assert_eq!(sa.diss, sb.diss);
        assert_eq!(sa.iters, sb.iters);
    }

    #[test]
    fn warm_start_cuts_iterations() {
        let (_, _, mut stepper) = primal_stepper(9);
        let n = stepper.n_internal();
        let first = stepper.step(1, 0.9, 0.5, &vec![0.0; n], &vec![0.0; n]).unwrap();
        let warm = stepper
            .step(1, 0.9, 0.5, &vec![0.0; n], &first.rate)
            .unwrap();
        assert!(warm.iters <= first.iters);
        assert_eq!(warm.iters, 0);
    }

    #[test]
    fn black_box_configurations_are_rejected() {
        let cfg = preset(ArchKind::FnnSigma, MaterialId::V1);
        let params = cfg.init_params(0);
        assert!(BiotStepper::new(&cfg, &params).is_err());
    }

    #[test]
    fn nonpositive_increment_is_rejected() {
        let (_, _, mut stepper) = primal_stepper(0);
        let n = stepper.n_internal();
        assert!(stepper.step(1, 0.1, 0.0, &vec![0.0; n], &vec![0.0; n]).is_err());
    }
}
