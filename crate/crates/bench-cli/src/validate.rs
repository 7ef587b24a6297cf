//! Rolling checkpoints out on the two bundled validation paths.

use std::fmt;
use std::str::FromStr;

use archzoo::{PredictionTrace, TrainedModel};
use datagen::{build_extrapolation_path, build_interpolation_path};
use refmat::{Material, MaterialState, StrainPath};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::experiment::arch_err;

/// Scaled dissipation below this magnitude counts as a violation.
pub const DISS_TOLERANCE_SCALED: f64 = 1e-10;

/// The two validation load cases: A stays inside the training ranges, B
/// adds a high-rate burst and a ramp far beyond the training strains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValPath {
    A,
    B,
}

impl ValPath {
    pub fn strain_path(&self) -> StrainPath {
        match self {
            ValPath::A => build_interpolation_path(),
            ValPath::B => build_extrapolation_path(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ValPath::A => "a",
            ValPath::B => "b",
        }
    }
}

impl fmt::Display for ValPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValPath {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "interpolation" => Ok(ValPath::A),
            "b" | "extrapolation" => Ok(ValPath::B),
            other => Err(CliError::Config(format!(
                "unknown validation path '{other}', expected 'a' or 'b'"
            ))),
        }
    }
}

/// Stress accuracy and dissipation screening of one rollout.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationMetrics {
    pub material: String,
    pub arch: String,
    pub path: String,
    pub n_steps: usize,
    pub stress_mae_mpa: f64,
    pub stress_max_err_mpa: f64,
    pub stress_range_mpa: f64,
    pub stress_mae_pct_of_range: f64,
    pub stress_max_pct_of_range: f64,
    /// Smallest reported dissipation rate (MPa/s), if the model reports one.
    pub diss_min: Option<f64>,
    /// Steps whose dissipation rate is below the scaled tolerance.
    pub diss_violation_steps: Vec<usize>,
    /// Fraction of reporting steps with nonnegative dissipation.
    pub diss_nonneg_fraction: Option<f64>,
}

/// Checks the emitted trace: strictly increasing time and finite values.
pub fn schema_check(trace: &PredictionTrace) -> CliResult<()> {
    let mut last_t = f64::NEG_INFINITY;
    for (i, row) in trace.rows.iter().enumerate() {
        if !(row.t > last_t) {
            return Err(CliError::Numeric(format!(
                "trace time is not strictly increasing at row {i} (t = {})",
                row.t
            )));
        }
        last_t = row.t;
        let finite = row.t.is_finite()
            && row.eps.is_finite()
            && row.sig_hat.is_finite()
            && row.psi_hat.is_none_or(f64::is_finite)
            && row.diss_hat.is_none_or(f64::is_finite)
            && row.xi_hat.iter().all(|x| x.is_finite());
        if !finite {
            return Err(CliError::Numeric(format!(
                "trace row {i} contains non-finite values"
            )));
        }
    }
    Ok(())
}

/// Reference response of the checkpoint's material on the chosen path.
pub fn reference_states(model: &TrainedModel, vpath: ValPath) -> CliResult<Vec<MaterialState>> {
    Material::from_id(model.material)
        .simulate(&vpath.strain_path())
        .map_err(CliError::numeric)
}

/// Rolls the model out and measures it against the analytic reference.
pub fn validate_model(
    model: &TrainedModel,
    vpath: ValPath,
) -> CliResult<(PredictionTrace, ValidationMetrics)> {
    model.validate().map_err(arch_err)?;
    let path = vpath.strain_path();
    let trace = archzoo::predict_path(&model.config, &model.params, &model.scaling, &path)
        .map_err(arch_err)?;
    schema_check(&trace)?;
    let reference = reference_states(model, vpath)?;
    let metrics = measure(model, vpath, &trace, &reference)?;
    Ok((trace, metrics))
}

fn measure(
    model: &TrainedModel,
    vpath: ValPath,
    trace: &PredictionTrace,
    reference: &[MaterialState],
) -> CliResult<ValidationMetrics> {
    let mae = trace.mae_sig(reference).map_err(arch_err)?;
    let mut max_err = 0.0_f64;
    let mut sig_lo = f64::INFINITY;
    let mut sig_hi = f64::NEG_INFINITY;
    for (row, state) in trace.rows.iter().zip(reference).skip(1) {
        max_err = max_err.max((row.sig_hat - state.sig).abs());
        sig_lo = sig_lo.min(state.sig);
        sig_hi = sig_hi.max(state.sig);
    }
    let range = sig_hi - sig_lo;
    if !(range > 0.0) {
        return Err(CliError::Numeric(
            "reference stress range is degenerate".into(),
        ));
    }
    let tol = DISS_TOLERANCE_SCALED * model.scaling.phi.scale;
    let violations: Vec<usize> = trace
        .diss_violations(tol)
        .into_iter()
        .map(|(step, _)| step)
        .collect();
    Ok(ValidationMetrics {
        material: model.material.as_str().to_string(),
        arch: model.config.kind().as_str().to_string(),
        path: vpath.as_str().to_string(),
        n_steps: trace.rows.len() - 1,
        stress_mae_mpa: mae,
        stress_max_err_mpa: max_err,
        stress_range_mpa: range,
        stress_mae_pct_of_range: 100.0 * mae / range,
        stress_max_pct_of_range: 100.0 * max_err / range,
        diss_min: trace
            .rows
            .iter()
            .skip(1)
            .filter_map(|r| r.diss_hat)
            .fold(None, |acc: Option<f64>, d| {
                Some(acc.map_or(d, |a| a.min(d)))
            }),
        diss_violation_steps: violations,
        diss_nonneg_fraction: trace.diss_nonneg_fraction(tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use archzoo::TraceRow;

    #[test]
    fn path_labels_parse_case_insensitively() {
        assert_eq!("A".parse::<ValPath>().unwrap(), ValPath::A);
        assert_eq!("extrapolation".parse::<ValPath>().unwrap(), ValPath::B);
        assert!("c".parse::<ValPath>().is_err());
    }

    #[test]
    fn the_two_paths_differ_in_reach() {
        let a = ValPath::A.strain_path();
        let b = ValPath::B.strain_path();
        let max = |p: &StrainPath| {
            p.steps()
                .iter()
                .fold(0.0_f64, |m, s| m.max(s.eps.abs()))
        };
        assert!(max(&a) <= 0.02 + 1e-12);
        assert!(max(&b) >= 0.06 - 1e-12);
    }

    #[test]
    fn schema_check_rejects_shuffled_time() {
        let rows = vec![
            TraceRow::rest(vec![0.0]),
            TraceRow {
                t: 0.5,
                eps: 0.01,
                sig_hat: 5.0,
                psi_hat: None,
                diss_hat: None,
                xi_hat: vec![0.0],
                nr_iters: None,
            },
            TraceRow {
                t: 0.25,
                eps: 0.02,
                sig_hat: 6.0,
                psi_hat: None,
                diss_hat: None,
                xi_hat: vec![0.0],
                nr_iters: None,
            },
        ];
        let trace = PredictionTrace { rows };
        assert!(schema_check(&trace).is_err());
    }
}
