//! Run reports, loss trajectories, and their serialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::TrainerError;
use crate::gradcheck::GradCheckReport;

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The iteration budget ran out.
    MaxIters,
    /// The recent losses stopped changing relative to the threshold.
    Converged,
    /// The best loss fell below the configured target.
    ReachedTarget,
    /// The quasi-Newton line search found no acceptable step.
    Stalled,
    /// The loss or gradient became non-finite; the result is the last
    /// finite best iterate.
    NonFinite,
}

/// Loss-trace entry: raw term values and the weighted total of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub total: f64,
    pub terms: Vec<f64>,
}

/// Summary of a finished [`minimize`](crate::minimize()) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub term_names: Vec<String>,
    pub term_weights: Vec<f64>,
    /// Raw term values at the returned iterate.
    pub final_terms: Vec<f64>,
    /// Weighted total at the returned iterate.
    pub final_loss: f64,
    /// Optimizer iterations actually performed.
    pub iterations: usize,
    pub wall_time_s: f64,
    pub stop: StopReason,
    pub grad_check: Option<GradCheckReport>,
}

impl TrainReport {
    /// Recomputed weighted term sum; equals `final_loss` within 1e-12.
    pub fn weighted_sum(&self) -> f64 {
        self.term_weights
            .iter()
            .zip(&self.final_terms)
            .map(|(w, t)| w * t)
            .sum()
    }

    pub fn to_json(&self) -> Result<String, TrainerError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self, TrainerError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn write_json_file(&self, path: &Path) -> Result<(), TrainerError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Result of [`minimize`](crate::minimize()): the best iterate found plus
/// its report and the per-iteration loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimized {
    pub theta: Vec<f64>,
    pub report: TrainReport,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl Minimized {
    /// Writes the loss trace as CSV with header `iter,total,<term names>`.
    pub fn write_trajectory_csv<W: Write>(&self, writer: W) -> Result<(), TrainerError> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string(), "total".to_string()];
        header.extend(self.report.term_names.iter().cloned());
        out.write_record(&header)?;
        for point in &self.trajectory {
            let mut row = vec![point.iter.to_string(), point.total.to_string()];
            row.extend(point.terms.iter().map(|t| t.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_trajectory_csv_file(&self, path: &Path) -> Result<(), TrainerError> {
        let file = fs::File::create(path)?;
        self.write_trajectory_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Minimized {
        Minimized {
            theta: vec![1.0, 2.0],
            report: TrainReport {
                term_names: vec!["sig".into(), "diss".into()],
                term_weights: vec![1.0, 5.0],
                final_terms: vec![0.25, 0.015625],
                final_loss: 0.25 + 5.0 * 0.015625,
                iterations: 3,
                wall_time_s: 0.5,
                stop: StopReason::MaxIters,
                grad_check: None,
            },
            trajectory: vec![
                TrajectoryPoint {
                    iter: 0,
                    total: 1.0,
                    terms: vec![0.5, 0.1],
                },
                TrajectoryPoint {
                    iter: 1,
                    total: 0.328125,
                    terms: vec![0.25, 0.015625],
                },
            ],
        }
    }

    #[test]
    fn report_json_round_trips() {
        let report = sample().report;
        let json = report.to_json().unwrap();
        let back = TrainReport::from_json(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn weighted_sum_matches_the_total() {
        let report = sample().report;
        assert!((report.weighted_sum() - report.final_loss).abs() <= 1e-12);
    }

    #[test]
    fn trajectory_csv_has_one_row_per_iteration() {
        let run = sample();
        let mut buf = Vec::new();
        run.write_trajectory_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,total,sig,diss");
        assert_eq!(lines.len(), 1 + run.trajectory.len());
        assert_eq!(lines[1], "0,1,0.5,0.1");
    }
}
