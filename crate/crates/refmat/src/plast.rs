//! Rate-independent elastoplasticity with kinematic and isotropic hardening.
//!
//! Internal variables are the plastic strain `eps_pl`, the kinematic
//! hardening strain `alpha` and the accumulated plastic strain `alpha_hat`:
//!
//! ```text
//! psi = 1/2 E (eps - eps_pl)^2 + 1/2 H alpha^2 + 1/2 Hh alpha_hat^2
//! sig = E (eps - eps_pl)
//! p = -H alpha        (back stress of opposite sign)
//! ph = -Hh alpha_hat
//! f = |sig + p| - (sig_y0 - ph)
//! ```
//!
//! Flow follows maximum dissipation: `d eps_pl = d alpha = lam sign(sig + p)`
//! and `d alpha_hat = lam` with the Karush-Kuhn-Tucker conditions
//! `lam >= 0`, `f <= 0`, `lam f = 0`. For the implicit step this reduces to
//! the classic scalar return mapping with
//! `lam = f_trial / (E + H + Hh)`, exact for linear hardening.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlastParams {
    /// Elastic stiffness `E` (MPa).
    pub stiffness: f64,
    /// Initial yield stress `sig_y0` (MPa).
    pub yield_stress: f64,
    /// Kinematic hardening modulus `H` (MPa).
    pub kinematic_modulus: f64,
    /// Isotropic hardening modulus `Hh` (MPa).
    pub isotropic_modulus: f64,
}

/// Result of one return-mapping step.
#[derive(Debug, Clone, Copy)]
pub struct PlastUpdate {
    pub eps_pl: f64,
    pub alpha: f64,
    pub alpha_hat: f64,
    pub sig: f64,
    /// Plastic multiplier increment of the step (not a rate).
    pub dlambda: f64,
}

impl PlastParams {
    /// Kinematic hardening only: `E = 20 GPa`, `sig_y0 = 100 MPa`,
    /// `H = 10 GPa`.
    pub fn p1() -> Self {
        PlastParams {
            stiffness: 20_000.0,
            yield_stress: 100.0,
            kinematic_modulus: 10_000.0,
            isotropic_modulus: 0.0,
        }
    }

    /// Mixed hardening: `E = 20 GPa`, `sig_y0 = 100 MPa`, `H = 3 GPa`,
    /// `Hh = 3 GPa`.
    pub fn p2() -> Self {
        PlastParams {
            stiffness: 20_000.0,
            yield_stress: 100.0,
            kinematic_modulus: 3_000.0,
            isotropic_modulus: 3_000.0,
        }
    }

    pub fn n_internal(&self) -> usize {
        3
    }

    /// Free energy (MPa).
    pub fn psi(&self, eps: f64, eps_pl: f64, alpha: f64, alpha_hat: f64) -> f64 {
        let el = eps - eps_pl;
        0.5 * self.stiffness * el * el
            + 0.5 * self.kinematic_modulus * alpha * alpha
            + 0.5 * self.isotropic_modulus * alpha_hat * alpha_hat
    }

    /// Yield function at a given stress and hardening state (MPa).
    pub fn yield_fn(&self, sig: f64, alpha: f64, alpha_hat: f64) -> f64 {
        let p = -self.kinematic_modulus * alpha;
        let ph = -self.isotropic_modulus * alpha_hat;
        (sig + p).abs() - (self.yield_stress - ph)
    }

    /// Return mapping from `(eps_pl, alpha, alpha_hat)` to the state at
    /// `eps_new`. Rate independent: no time increment enters.
    pub fn step(&self, eps_pl: f64, alpha: f64, alpha_hat: f64, eps_new: f64) -> PlastUpdate {
        let sig_trial = self.stiffness * (eps_new - eps_pl);
        let rel = sig_trial - self.kinematic_modulus * alpha;
        let f_trial =
            rel.abs() - (self.yield_stress + self.isotropic_modulus * alpha_hat);
        if f_trial <= 0.0 {
            return PlastUpdate {
                eps_pl,
                alpha,
                alpha_hat,
                sig: sig_trial,
                dlambda: 0.0,
            };
        }
        let dlambda = f_trial
            / (self.stiffness + self.kinematic_modulus + self.isotropic_modulus);
        let dir = rel.signum();
        let eps_pl_new = eps_pl + dlambda * dir;
        PlastUpdate {
            eps_pl: eps_pl_new,
            alpha: alpha + dlambda * dir,
            alpha_hat: alpha_hat + dlambda,
            sig: self.stiffness * (eps_new - eps_pl_new),
            dlambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn elastic_step_keeps_internal_variables() {
        // P1 at eps = 0.4 %: sig_trial = 80 MPa < 100 MPa.
        let p1 = PlastParams::p1();
        let u = p1.step(0.0, 0.0, 0.0, 0.004);
        assert_eq!(u.dlambda, 0.0);
        assert_eq!(u.eps_pl, 0.0);
        assert_relative_eq!(u.sig, 80.0, max_relative = 1e-14);
    }

    #[test]
    fn plastic_step_matches_hand_return_mapping() {
        // P1 at eps = 1 %: sig_trial = 200, f_trial = 100,
        // dlambda = 100 / 30000 = 1/300, sig = 20000*(0.01 - 1/300) = 400/3.
        let p1 = PlastParams::p1();
        let u = p1.step(0.0, 0.0, 0.0, 0.01);
        assert_relative_eq!(u.dlambda, 1.0 / 300.0, max_relative = 1e-14);
        assert_relative_eq!(u.eps_pl, 1.0 / 300.0, max_relative = 1e-14);
        assert_relative_eq!(u.sig, 400.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn updated_state_sits_on_the_yield_surface() {
        let p2 = PlastParams::p2();
        let u = p2.step(0.0, 0.0, 0.0, 0.01);
        assert!(u.dlambda > 0.0);
        let f = p2.yield_fn(u.sig, u.alpha, u.alpha_hat);
        assert!(f.abs() < 1e-10, "f = {f:e}");
    }

    #[test]
    fn reverse_loading_yields_earlier_with_kinematic_hardening() {
        // Load to 1 %, then unload: with a back stress built up, reverse
        // yielding starts before -100 MPa.
        let p1 = PlastParams::p1();
        let u1 = p1.step(0.0, 0.0, 0.0, 0.01);
        // Elastic unloading from sig = 400/3 by 2 sig_y: still elastic until
        // sig + p = -100 with p = -H alpha < 0.
        let p = -p1.kinematic_modulus * u1.alpha;
        let sig_reverse_yield = -p1.yield_stress - p;
        let eps_at_reverse = u1.eps_pl + sig_reverse_yield / p1.stiffness;
        let u2 = p1.step(u1.eps_pl, u1.alpha, u1.alpha_hat, eps_at_reverse - 1e-9);
        assert!(u2.dlambda > 0.0);
        let u3 = p1.step(u1.eps_pl, u1.alpha, u1.alpha_hat, eps_at_reverse + 1e-6);
        assert_eq!(u3.dlambda, 0.0);
    }
}
