//! Discrete strain paths.
//!
//! A path is the sequence of states visited after the implicit zero state
//! `(t = 0, eps = 0)`. Each step stores the absolute time `t`, the strain
//! `eps` at that time, and the increment `dt` spanning `(t_prev, t]`, so the
//! increment associated with a step is the one that leads into it.

use serde::{Deserialize, Serialize};

use crate::error::PathError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    /// Absolute time (s).
    pub t: f64,
    /// Increment spanning `(t_prev, t]` (s).
    pub dt: f64,
    /// Total strain (-).
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainPath {
    steps: Vec<PathStep>,
}

impl StrainPath {
    /// Validates monotone time, positive increments and `t`/`dt` consistency
    /// (relative slack `1e-9` to absorb accumulated rounding).
    pub fn new(steps: Vec<PathStep>) -> Result<Self, PathError> {
        let mut t_prev = 0.0;
        for (i, s) in steps.iter().enumerate() {
            if !(s.t.is_finite() && s.dt.is_finite() && s.eps.is_finite()) {
                return Err(PathError::NonFinite { step: i });
            }
            if s.dt <= 0.0 {
                return Err(PathError::NonPositiveDt { step: i, dt: s.dt });
            }
            if s.t <= t_prev {
                return Err(PathError::NonIncreasingTime { step: i });
            }
            let gap = s.t - t_prev;
            if (gap - s.dt).abs() > 1e-9 * s.t.max(1.0) {
                return Err(PathError::InconsistentIncrement {
                    step: i,
                    prev: i.wrapping_sub(1),
                    gap,
                    dt: s.dt,
                });
            }
            t_prev = s.t;
        }
        Ok(StrainPath { steps })
    }

    /// Build from `(dt, eps)` pairs, accumulating time from zero.
    pub fn from_increments(increments: &[(f64, f64)]) -> Result<Self, PathError> {
        let mut t = 0.0;
        let steps = increments
            .iter()
            .map(|&(dt, eps)| {
                t += dt;
                PathStep { t, dt, eps }
            })
            .collect();
        StrainPath::new(steps)
    }

    /// Constant-rate ramp from the zero state to `eps_end` over `n` equal
    /// steps of length `dt`.
    pub fn ramp(eps_end: f64, dt: f64, n: usize) -> Result<Self, PathError> {
        let increments: Vec<(f64, f64)> = (1..=n)
            .map(|k| (dt, eps_end * k as f64 / n as f64))
            .collect();
        StrainPath::from_increments(&increments)
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Total duration (s); zero for an empty path.
    pub fn duration(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t)
    }

    /// Split every increment in two, interpolating strain linearly at the
    /// midpoints. Used for time-step refinement studies.
    pub fn refined(&self) -> StrainPath {
        let mut steps = Vec::with_capacity(2 * self.steps.len());
        let mut prev = PathStep {
            t: 0.0,
            dt: 0.0,
            eps: 0.0,
        };
        for &s in &self.steps {
            let half = s.dt / 2.0;
            steps.push(PathStep {
                t: prev.t + half,
                dt: half,
                eps: 0.5 * (prev.eps + s.eps),
            });
            steps.push(PathStep {
                t: s.t,
                dt: s.dt - half,
                eps: s.eps,
            });
            prev = s;
        }
        StrainPath { steps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_increments_accumulates_time() {
        let p = StrainPath::from_increments(&[(0.5, 0.01), (0.25, 0.02)]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.steps()[1].t, 0.75);
        assert_eq!(p.duration(), 0.75);
    }

    #[test]
    fn rejects_inconsistent_t_dt() {
        let bad = vec![
            PathStep {
                t: 1.0,
                dt: 1.0,
                eps: 0.0,
            },
            PathStep {
                t: 2.0,
                dt: 0.5,
                eps: 0.0,
            },
        ];
        assert!(matches!(
            StrainPath::new(bad),
            Err(PathError::InconsistentIncrement { step: 1, .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_dt_and_backwards_time() {
        assert!(StrainPath::from_increments(&[(0.0, 0.01)]).is_err());
        let bad = vec![
            PathStep {
                t: 1.0,
                dt: 1.0,
                eps: 0.0,
            },
            PathStep {
                t: 0.5,
                dt: 0.5,
                eps: 0.0,
            },
        ];
        assert!(StrainPath::new(bad).is_err());
    }

    #[test]
    fn refined_halves_every_increment() {
        let p = StrainPath::from_increments(&[(0.4, 0.01), (0.2, 0.03)]).unwrap();
        let r = p.refined();
        assert_eq!(r.len(), 4);
        assert_eq!(r.duration(), p.duration());
        assert_eq!(r.steps()[0].eps, 0.005);
        assert_eq!(r.steps()[1].eps, 0.01);
        assert_eq!(r.steps()[2].eps, 0.02);
        // midpoint times
        assert!((r.steps()[0].t - 0.2).abs() < 1e-15);
        assert!((r.steps()[2].t - 0.5).abs() < 1e-15);
    }
}
