//! Full-batch minimization with best-iterate retention.

use std::collections::VecDeque;
use std::time::Instant;

use crate::config::{Method, OptimConfig};
use crate::error::TrainerError;
use crate::gradcheck::grad_check;
use crate::report::{Minimized, StopReason, TrainReport, TrajectoryPoint};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

/// One full-batch evaluation of a loss: raw term values, the weighted total
/// being minimized, and the gradient of the total.
#[derive(Debug, Clone)]
pub struct Eval {
    pub terms: Vec<f64>,
    pub total: f64,
    pub grad: Vec<f64>,
}

/// Names and weights of the loss terms, fixed for a whole run. The weighted
/// term sum must reproduce every evaluation's total within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSchema {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
}

impl TermSchema {
    pub fn new(names: Vec<String>, weights: Vec<f64>) -> Result<Self, TrainerError> {
        if names.is_empty() || names.len() != weights.len() {
            return Err(TrainerError::Shape(format!(
                "{} term names against {} weights",
                names.len(),
                weights.len()
            )));
        }
        Ok(Self { names, weights })
    }

    /// Schema of a plain scalar loss reported as a single unit-weight term.
    pub fn single(name: &str) -> Self {
        Self {
            names: vec![name.to_string()],
            weights: vec![1.0],
        }
    }
}

/// Best iterate seen so far.
struct Best {
    theta: Vec<f64>,
    terms: Vec<f64>,
    total: f64,
    grad: Vec<f64>,
    iter: usize,
}

impl Best {
    fn update(&mut self, theta: &[f64], ev: &Eval, iter: usize) {
        if ev.total < self.total {
            self.theta.copy_from_slice(theta);
            self.terms.clone_from(&ev.terms);
            self.total = ev.total;
            self.grad.clone_from(&ev.grad);
            self.iter = iter;
        }
    }
}

/// Minimizes a full-batch loss starting from `theta0`.
///
/// The first-order phase runs adaptive moment estimation with step decay on
/// plateaus; with [`Method::QuasiNewtonRefine`] the remaining budget (at
/// least the final tenth) goes to a limited-memory quasi-Newton polish with
/// a backtracking line search. The best iterate ever evaluated is retained
/// and returned, so the reported loss never increases with more budget. The
/// run stops early once the trailing raw losses agree to the configured
/// relative tolerance, and aborts with the last finite best iterate if the
/// loss or gradient turns non-finite.
pub fn minimize<F>(
    mut loss: F,
    theta0: &[f64],
    schema: &TermSchema,
    cfg: &OptimConfig,
) -> Result<Minimized, TrainerError>
where
    F: FnMut(&[f64]) -> Eval,
{
    cfg.validate()?;
    if theta0.is_empty() {
        return Err(TrainerError::Config("empty parameter vector".into()));
    }
    let start = Instant::now();
    let n = theta0.len();

    let grad_report = if cfg.grad_check_samples > 0 {
        Some(grad_check(&mut loss, theta0, cfg.grad_check_samples, cfg.seed)?)
    } else {
        None
    };

    let mut theta = theta0.to_vec();
    let ev0 = checked_eval(&mut loss, &theta, schema, n)?;
    if !ev0.total.is_finite() {
        return Err(TrainerError::NonFinite {
            what: format!("loss at the initial iterate (total = {})", ev0.total),
        });
    }

    let mut best = Best {
        theta: theta.clone(),
        terms: ev0.terms.clone(),
        total: ev0.total,
        grad: ev0.grad.clone(),
        iter: 0,
    };
    let mut trajectory = vec![TrajectoryPoint {
        iter: 0,
        total: ev0.total,
        terms: ev0.terms.clone(),
    }];
    let mut totals = vec![ev0.total];
    let mut iterations = 0;
    let mut stop: Option<StopReason> = None;

    if !finite(&ev0.grad) {
        stop = Some(StopReason::NonFinite);
    }

    let adam_cap = match cfg.method {
        Method::AdaptiveFirstOrder => cfg.max_iters,
        Method::QuasiNewtonRefine => (cfg.max_iters * 9).div_ceil(10),
    };

    if stop.is_none() {
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut lr = cfg.learning_rate;
        let mut grad = ev0.grad;
        let mut b1t = 1.0;
        let mut b2t = 1.0;
        let mut last_decay = 0;
        for it in 1..=adam_cap {
            b1t *= BETA1;
            b2t *= BETA2;
            for i in 0..n {
                let g = grad[i];
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
                let mhat = m[i] / (1.0 - b1t);
                let vhat = v[i] / (1.0 - b2t);
                theta[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
            let ev = checked_eval(&mut loss, &theta, schema, n)?;
            iterations = it;
            if !ev.total.is_finite() || !finite(&ev.grad) {
                stop = Some(StopReason::NonFinite);
                break;
            }
            trajectory.push(TrajectoryPoint {
                iter: it,
                total: ev.total,
                terms: ev.terms.clone(),
            });
            totals.push(ev.total);
            best.update(&theta, &ev, it);
            grad = ev.grad;
            if cfg.target.is_some_and(|t| best.total <= t) {
                stop = Some(StopReason::ReachedTarget);
                break;
            }
            if settled(&totals, cfg.tol_window, cfg.tol) {
                stop = Some(StopReason::Converged);
                break;
            }
            if it - best.iter.max(last_decay) >= cfg.plateau_window {
                lr *= cfg.decay;
                last_decay = it;
            }
        }
    }

    let refine = matches!(cfg.method, Method::QuasiNewtonRefine)
        && !matches!(
            stop,
            Some(StopReason::NonFinite | StopReason::ReachedTarget)
        )
        && iterations < cfg.max_iters;
    if refine {
        stop = None;
        theta.copy_from_slice(&best.theta);
        let mut f = best.total;
        let mut g = best.grad.clone();
        let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut trial = vec![0.0; n];
        for it in iterations + 1..=cfg.max_iters {
            iterations = it;
            let mut d = two_loop(&g, &hist);
            let mut gd = dot(&g, &d);
            if gd >= 0.0 {
                hist.clear();
                d = g.iter().map(|x| -x).collect();
                gd = -dot(&g, &g);
                if gd == 0.0 {
                    stop = Some(StopReason::Converged);
                    break;
                }
            }
            let mut t = if hist.is_empty() {
                (1.0 / norm(&d)).min(1.0)
            } else {
                1.0
            };
            let mut accepted: Option<Eval> = None;
            for _ in 0..=MAX_HALVINGS {
                for i in 0..n {
                    trial[i] = theta[i] + t * d[i];
                }
                let ev = checked_eval(&mut loss, &trial, schema, n)?;
                if ev.total.is_finite() && ev.total <= f + ARMIJO_C1 * t * gd {
                    accepted = Some(ev);
                    break;
                }
                t *= 0.5;
            }
            let Some(ev) = accepted else {
                if hist.is_empty() {
                    stop = Some(StopReason::Stalled);
                    break;
                }
                // A stale curvature model can block even tiny steps; drop it
                // and retry from the plain gradient next iteration.
                hist.clear();
                continue;
            };
            if !finite(&ev.grad) {
                stop = Some(StopReason::NonFinite);
                break;
            }
            let s: Vec<f64> = d.iter().map(|di| t * di).collect();
            let y: Vec<f64> = ev.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-10 * norm(&s) * norm(&y) {
                hist.push_back((s, y, 1.0 / sy));
                if hist.len() > LBFGS_MEMORY {
                    hist.pop_front();
                }
            }
            for i in 0..n {
                theta[i] += t * d[i];
            }
            f = ev.total;
            g.clone_from(&ev.grad);
            trajectory.push(TrajectoryPoint {
                iter: it,
                total: ev.total,
                terms: ev.terms.clone(),
            });
            totals.push(ev.total);
            best.update(&theta, &ev, it);
            if cfg.target.is_some_and(|t| best.total <= t) {
                stop = Some(StopReason::ReachedTarget);
                break;
            }
            if settled(&totals, cfg.tol_window, cfg.tol) {
                stop = Some(StopReason::Converged);
                break;
            }
        }
    }

    let report = TrainReport {
        term_names: schema.names.clone(),
        term_weights: schema.weights.clone(),
        final_terms: best.terms,
        final_loss: best.total,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        stop: stop.unwrap_or(StopReason::MaxIters),
        grad_check: grad_report,
    };
    Ok(Minimized {
        theta: best.theta,
        report,
        trajectory,
    })
}

/// Evaluates the loss and validates shapes and the term-sum identity.
fn checked_eval<F>(
    loss: &mut F,
    theta: &[f64],
    schema: &TermSchema,
    n: usize,
) -> Result<Eval, TrainerError>
where
    F: FnMut(&[f64]) -> Eval,
{
    let ev = loss(theta);
    if ev.grad.len() != n {
        return Err(TrainerError::Shape(format!(
            "gradient has {} entries for {} parameters",
            ev.grad.len(),
            n
        )));
    }
    if ev.terms.len() != schema.names.len() {
        return Err(TrainerError::Shape(format!(
            "{} term values against {} names",
            ev.terms.len(),
            schema.names.len()
        )));
    }
    if ev.total.is_finite() {
        let sum: f64 = schema
            .weights
            .iter()
            .zip(&ev.terms)
            .map(|(w, t)| w * t)
            .sum();
        if !((sum - ev.total).abs() <= 1e-12 * ev.total.abs().max(1.0)) {
            return Err(TrainerError::InconsistentTotal {
                sum,
                total: ev.total,
            });
        }
    }
    Ok(ev)
}

/// True once the trailing `window + 1` raw losses agree to relative `tol`.
///
/// The spread is taken over raw losses rather than the running best so that
/// a step-size plateau with visible oscillation does not read as
/// convergence before the step decay has had a chance to act.
fn settled(totals: &[f64], window: usize, tol: f64) -> bool {
    if totals.len() <= window {
        return false;
    }
    let tail = &totals[totals.len() - window - 1..];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in tail {
        lo = lo.min(t);
        hi = hi.max(t);
    }
    hi - lo <= tol * hi.abs().max(lo.abs())
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two-loop recursion: applies the implicit inverse-Hessian estimate to the
/// gradient and returns the (negated) search direction.
fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in hist.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in &mut q {
        *qi = -*qi;
    }
    q
}
