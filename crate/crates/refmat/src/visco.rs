//! Generalized-Maxwell viscoelasticity with optional stress-dependent
//! viscosity.
//!
//! The model is a spring of stiffness `E` in parallel with Maxwell branches
//! `(E_a, eta_a)`. Internal variables are the viscous strains `eps_vi_a`,
//! one per branch; the thermodynamic force on each is the branch overstress
//! `sig_ov_a = E_a (eps - eps_vi_a)`:
//!
//! ```text
//! psi  = 1/2 E eps^2 + sum_a 1/2 E_a (eps - eps_vi_a)^2
//! sig  = E eps + sum_a sig_ov_a
//! d/dt eps_vi_a = sig_ov_a / eta_a(sig_ov_a)
//! eta_a(s) = eta_hat_a * exp(a_a |s|^b_a)
//! ```
//!
//! Time integration is implicit Euler. For a linear branch (`a_a = 0`) the
//! update has a closed form; a stress-dependent branch leads to one scalar
//! nonlinear equation per branch, solved by damped Newton iteration with a
//! bisection fallback inside a sign-changing bracket.

use serde::{Deserialize, Serialize};

use crate::error::StepError;

/// Relative residual tolerance of the per-branch Newton solve.
const NEWTON_RTOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxwellBranch {
    /// Branch stiffness `E_a` (MPa).
    pub stiffness: f64,
    /// Reference viscosity `eta_hat_a` (MPa s).
    pub viscosity: f64,
    /// Exponential prefactor `a_a` of the viscosity law (-); `0` keeps the
    /// branch linear.
    pub rate_coeff: f64,
    /// Overstress exponent `b_a` (-); the overstress enters in MPa.
    pub rate_exp: f64,
}

impl MaxwellBranch {
    pub fn linear(stiffness: f64, viscosity: f64) -> Self {
        MaxwellBranch {
            stiffness,
            viscosity,
            rate_coeff: 0.0,
            rate_exp: 1.0,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.rate_coeff == 0.0
    }

    /// Viscosity at overstress `s` (MPa s).
    pub fn eta(&self, s: f64) -> f64 {
        if self.is_linear() {
            self.viscosity
        } else {
            self.viscosity * (self.rate_coeff * s.abs().powf(self.rate_exp)).exp()
        }
    }

    /// Viscous strain rate `s / eta(s)` (1/s).
    pub fn flow_rate(&self, s: f64) -> f64 {
        s / self.eta(s)
    }

    /// Derivative of [`MaxwellBranch::flow_rate`] w.r.t. the overstress:
    /// `(1 - a b |s|^b) / eta(s)`, continuous through `s = 0` for `b > 0`.
    fn flow_rate_dstress(&self, s: f64) -> f64 {
        let ab_term = if self.is_linear() {
            0.0
        } else {
            self.rate_coeff * self.rate_exp * s.abs().powf(self.rate_exp)
        };
        (1.0 - ab_term) / self.eta(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscoParams {
    /// Equilibrium stiffness `E` (MPa).
    pub stiffness: f64,
    pub branches: Vec<MaxwellBranch>,
}

impl ViscoParams {
    /// One stress-dependent Maxwell branch:
    /// `E = 1 GPa`, `E_1 = 10 GPa`, `eta_hat_1 = 200 GPa s`,
    /// `a_1 = -0.7`, `b_1 = 0.1`.
    pub fn v1() -> Self {
        ViscoParams {
            stiffness: 1_000.0,
            branches: vec![MaxwellBranch {
                stiffness: 10_000.0,
                viscosity: 200_000.0,
                rate_coeff: -0.7,
                rate_exp: 0.1,
            }],
        }
    }

    /// Two linear Maxwell branches:
    /// `E = 1 GPa`, `E_1 = 10 GPa`, `eta_1 = 10 GPa s`,
    /// `E_2 = 20 GPa`, `eta_2 = 5 GPa s`.
    pub fn v2() -> Self {
        ViscoParams {
            stiffness: 1_000.0,
            branches: vec![
                MaxwellBranch::linear(10_000.0, 10_000.0),
                MaxwellBranch::linear(20_000.0, 5_000.0),
            ],
        }
    }

    pub fn n_internal(&self) -> usize {
        self.branches.len()
    }

    /// Free energy at `(eps, eps_vi)` (MPa).
    pub fn psi(&self, eps: f64, eps_vi: &[f64]) -> f64 {
        let mut psi = 0.5 * self.stiffness * eps * eps;
        for (b, &evi) in self.branches.iter().zip(eps_vi) {
            let el = eps - evi;
            psi += 0.5 * b.stiffness * el * el;
        }
        psi
    }

    /// Advance one implicit-Euler step from viscous strains `eps_vi_old` to
    /// the state at `(eps_new, +dt)`.
    ///
    /// Returns `(eps_vi_new, sig_ov_new)` per branch.
    pub fn step(
        &self,
        eps_vi_old: &[f64],
        eps_new: f64,
        dt: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), StepError> {
        if !(eps_new.is_finite() && dt.is_finite() && dt > 0.0) {
            return Err(StepError::NonFinite {
                eps: eps_new,
                dt,
            });
        }
        let mut eps_vi = Vec::with_capacity(self.branches.len());
        let mut sig_ov = Vec::with_capacity(self.branches.len());
        for (idx, (branch, &evi_old)) in self.branches.iter().zip(eps_vi_old).enumerate() {
            let evi_new = if branch.is_linear() {
                // eps_vi' = (eps_vi + dt E eps / eta) / (1 + dt E / eta)
                let k = dt * branch.stiffness / branch.viscosity;
                (evi_old + k * eps_new) / (1.0 + k)
            } else {
                solve_branch(branch, evi_old, eps_new, dt)
                    .map_err(|(iterations, residual)| StepError::BranchNonconvergence {
                        branch: idx,
                        iterations,
                        residual,
                    })?
            };
            eps_vi.push(evi_new);
            sig_ov.push(branch.stiffness * (eps_new - evi_new));
        }
        Ok((eps_vi, sig_ov))
    }
}

/// Root of `g(x) = x - evi_old - dt * flow_rate(E (eps - x))` in `x`.
///
/// `g` is strictly increasing whenever `a b <= 0` (both reference materials)
/// and the bracket is grown from the two linearized solutions, so bisection
/// always has a sign change to fall back on when a Newton step leaves the
/// bracket or fails to reduce `|g|`.
fn solve_branch(
    branch: &MaxwellBranch,
    evi_old: f64,
    eps_new: f64,
    dt: f64,
) -> Result<f64, (usize, f64)> {
    let g = |x: f64| {
        let s = branch.stiffness * (eps_new - x);
        x - evi_old - dt * branch.flow_rate(s)
    };
    let g_prime = |x: f64| {
        let s = branch.stiffness * (eps_new - x);
        1.0 + dt * branch.stiffness * branch.flow_rate_dstress(s)
    };
    let tol = NEWTON_RTOL * eps_new.abs().max(evi_old.abs()).max(1e-6);

    // Linearized solutions at the reference viscosity and at the viscosity of
    // the trial overstress straddle the root for monotone eta.
    let lin = |eta: f64| {
        let k = dt * branch.stiffness / eta;
        (evi_old + k * eps_new) / (1.0 + k)
    };
    let s_trial = branch.stiffness * (eps_new - evi_old);
    let (mut lo, mut hi) = {
        let x_a = lin(branch.viscosity);
        let x_b = lin(branch.eta(s_trial));
        (x_a.min(x_b), x_a.max(x_b))
    };
    // Grow until the bracket contains a sign change.
    let mut width = (hi - lo).max(tol);
    let mut grow = 0;
    while g(lo) > 0.0 || g(hi) < 0.0 {
        if g(lo) > 0.0 {
            lo -= width;
        }
        if g(hi) < 0.0 {
            hi += width;
        }
        width *= 2.0;
        grow += 1;
        if grow > 120 {
            return Err((grow, g(lo).abs().min(g(hi).abs())));
        }
    }

    let mut x = 0.5 * (lo + hi);
    for iter in 0..NEWTON_MAX_ITER {
        let gx = g(x);
        if gx.abs() < tol {
            return Ok(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dgx = g_prime(x);
        let newton = x - gx / dgx;
        x = if dgx.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON * x.abs().max(1e-12) {
            return Ok(x);
        }
        let _ = iter;
    }
    Err((NEWTON_MAX_ITER, g(x).abs()))
}
