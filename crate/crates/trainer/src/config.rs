//! Optimizer configuration.

use serde::{Deserialize, Serialize};

use crate::error::TrainerError;

/// Optimization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Full-batch adaptive first-order updates for the whole budget.
    AdaptiveFirstOrder,
    /// Adaptive first-order updates for most of the budget, then a
    /// limited-memory quasi-Newton polish over whatever budget remains
    /// (at least the final tenth).
    QuasiNewtonRefine,
}

/// Settings for [`minimize`](crate::minimize()).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub method: Method,
    /// Initial step size of the first-order phase.
    pub learning_rate: f64,
    /// Multiplier applied to the step size after a plateau.
    pub decay: f64,
    /// Iterations without a new best loss before the step size decays.
    pub plateau_window: usize,
    /// Hard cap on optimizer iterations.
    pub max_iters: usize,
    /// Relative spread of the recent raw losses below which the run stops.
    pub tol: f64,
    /// Number of trailing iterations the early-stop spread is taken over.
    pub tol_window: usize,
    /// Best loss at which the run may stop before the budget runs out.
    pub target: Option<f64>,
    /// Coordinates sampled by the start-of-run gradient check (0 skips it).
    pub grad_check_samples: usize,
    /// Seed for the gradient-check coordinate sampling.
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveFirstOrder,
            learning_rate: 1e-3,
            decay: 0.5,
            plateau_window: 200,
            max_iters: 10_000,
            tol: 1e-8,
            tol_window: 100,
            target: None,
            grad_check_samples: 8,
            seed: 0,
        }
    }
}

impl OptimConfig {
    /// Default configuration with an explicit iteration budget.
    pub fn with_budget(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    /// Same configuration with the quasi-Newton polish enabled.
    pub fn refined(mut self) -> Self {
        self.method = Method::QuasiNewtonRefine;
        self
    }

    /// Checks every knob before a run starts.
    pub fn validate(&self) -> Result<(), TrainerError> {
        if self.max_iters < 1 {
            return Err(TrainerError::Config(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(TrainerError::Config(format!(
                "loss-change threshold must be positive, got {}",
                self.tol
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainerError::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(TrainerError::Config(format!(
                "decay must lie in (0, 1), got {}",
                self.decay
            )));
        }
        if self.plateau_window < 1 || self.tol_window < 1 {
            return Err(TrainerError::Config(
                "plateau and early-stop windows must be at least 1".into(),
            ));
        }
        if let Some(t) = self.target {
            if !t.is_finite() {
                return Err(TrainerError::Config(format!(
                    "target loss must be finite, got {t}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_configuration_is_valid() {
        OptimConfig::default().validate().unwrap();
        OptimConfig::with_budget(1).validate().unwrap();
    }

    #[test]
    fn degenerate_knobs_are_rejected() {
        let zero_budget = OptimConfig {
            max_iters: 0,
            ..OptimConfig::default()
        };
        assert!(zero_budget.validate().is_err());

        let bad_tol = OptimConfig {
            tol: 0.0,
            ..OptimConfig::default()
        };
        assert!(bad_tol.validate().is_err());

        let bad_lr = OptimConfig {
            learning_rate: -1.0,
            ..OptimConfig::default()
        };
        assert!(bad_lr.validate().is_err());

        let bad_decay = OptimConfig {
            decay: 1.0,
            ..OptimConfig::default()
        };
        assert!(bad_decay.validate().is_err());
    }

    #[test]
    fn method_names_serialize_in_kebab_case() {
        let json = serde_json::to_string(&Method::AdaptiveFirstOrder).unwrap();
        assert_eq!(json, "\"adaptive-first-order\"");
        let json = serde_json::to_string(&Method::QuasiNewtonRefine).unwrap();
        assert_eq!(json, "\"quasi-newton-refine\"");
    }
}
