//! Finite-difference verification of loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::TrainerError;
use crate::minimize::Eval;

/// Relative error bound a checked coordinate must meet.
pub const GRAD_CHECK_TOL: f64 = 1e-5;
/// Fraction of checked coordinates that must pass.
pub const GRAD_CHECK_QUORUM: f64 = 0.95;
/// Base step of the coarse central-difference stencil.
const FD_STEP: f64 = 1e-4;
/// Relative disagreement between the two stencils that marks a kink.
const KINK_TOL: f64 = 0.05;
/// Resampling attempts granted per requested sample.
const ATTEMPTS_PER_SAMPLE: usize = 10;

/// Outcome of comparing reverse-mode gradients against central differences.
///
/// Each sampled coordinate is probed with two stencil widths; coordinates
/// whose stencils straddle an activation kink disagree between widths and
/// are excluded and resampled rather than counted as failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    /// Coordinates requested.
    pub samples: usize,
    /// Coordinates actually compared after kink exclusion.
    pub checked: usize,
    /// Probe attempts discarded because the stencils disagreed.
    pub excluded: usize,
    /// Distinct coordinate indices that were excluded.
    pub excluded_indices: Vec<usize>,
    /// Checked coordinates within [`GRAD_CHECK_TOL`].
    pub passed: usize,
    /// Largest relative error over the checked coordinates.
    pub max_rel_err: f64,
    /// Whether at least [`GRAD_CHECK_QUORUM`] of the checked coordinates passed.
    pub pass: bool,
}

/// Compares the gradient reported by `loss` against Richardson-extrapolated
/// central differences on randomly sampled coordinates.
pub fn grad_check<F>(
    mut loss: F,
    theta: &[f64],
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, TrainerError>
where
    F: FnMut(&[f64]) -> Eval,
{
    if samples == 0 {
        return Err(TrainerError::Config(
            "gradient check needs at least one sample".into(),
        ));
    }
    if theta.is_empty() {
        return Err(TrainerError::Config(
            "gradient check needs a non-empty parameter vector".into(),
        ));
    }

    let base = loss(theta);
    if base.grad.len() != theta.len() {
        return Err(TrainerError::Shape(format!(
            "gradient has {} entries for {} parameters",
            base.grad.len(),
            theta.len()
        )));
    }
    if !base.total.is_finite() {
        return Err(TrainerError::NonFinite {
            what: format!("loss at the checked point (total = {})", base.total),
        });
    }
    if let Some(g) = base.grad.iter().find(|g| !g.is_finite()) {
        return Err(TrainerError::NonFinite {
            what: format!("gradient at the checked point (component = {g})"),
        });
    }

    // Components below a thousandth of the gradient scale are compared
    // against this floor instead of their own magnitude: central differences
    // on them are dominated by cancellation noise of the loss evaluation,
    // and their relative accuracy does not matter for descent.
    let grad_scale = base.grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
    let floor = (1e-3 * grad_scale).max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = theta.to_vec();
    let mut checked = 0;
    let mut passed = 0;
    let mut excluded = 0;
    let mut excluded_indices: Vec<usize> = Vec::new();
    let mut max_rel_err = 0.0_f64;

    let budget = samples.saturating_mul(ATTEMPTS_PER_SAMPLE);
    let mut attempts = 0;
    while checked < samples && attempts < budget {
        attempts += 1;
        let i = rng.random_range(0..theta.len());
        let h = FD_STEP * theta[i].abs().max(1.0);
        let coarse = central(&mut loss, &mut work, i, h)?;
        let fine = central(&mut loss, &mut work, i, 0.5 * h)?;
        let stencil_scale = coarse.abs().max(fine.abs()).max(floor);
        if (coarse - fine).abs() > KINK_TOL * stencil_scale {
            excluded += 1;
            if !excluded_indices.contains(&i) {
                excluded_indices.push(i);
            }
            continue;
        }
        let fd = (4.0 * fine - coarse) / 3.0;
        let rel = (base.grad[i] - fd).abs() / base.grad[i].abs().max(fd.abs()).max(floor);
        checked += 1;
        max_rel_err = max_rel_err.max(rel);
        if rel < GRAD_CHECK_TOL {
            passed += 1;
        }
    }

    let pass = checked > 0 && passed * 20 >= checked * 19;
    Ok(GradCheckReport {
        samples,
        checked,
        excluded,
        excluded_indices,
        passed,
        max_rel_err,
        pass,
    })
}

/// Central difference along coordinate `i`; restores `work` afterwards.
fn central<F>(loss: &mut F, work: &mut [f64], i: usize, h: f64) -> Result<f64, TrainerError>
where
    F: FnMut(&[f64]) -> Eval,
{
    let orig = work[i];
    work[i] = orig + h;
    let fp = loss(work).total;
    work[i] = orig - h;
    let fm = loss(work).total;
    work[i] = orig;
    if !fp.is_finite() || !fm.is_finite() {
        return Err(TrainerError::NonFinite {
            what: format!("loss under a perturbation of coordinate {i}"),
        });
    }
    Ok((fp - fm) / (2.0 * h))
}
