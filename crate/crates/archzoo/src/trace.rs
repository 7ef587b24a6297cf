//! Predicted state trajectories and their CSV form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use refmat::MaterialState;

use crate::error::ArchError;

/// One predicted state along a strain path. Quantities a model family does
/// not provide stay `None` and serialize as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub eps: f64,
    pub sig_hat: f64,
    pub psi_hat: Option<f64>,
    pub diss_hat: Option<f64>,
    pub xi_hat: Vec<f64>,
    pub nr_iters: Option<u32>,
}

impl TraceRow {
    /// The shared initial condition: unloaded and stress free at `t = 0`,
    /// with the model's initial internal variables.
    pub fn rest(xi_hat: Vec<f64>) -> Self {
        TraceRow {
            t: 0.0,
            eps: 0.0,
            sig_hat: 0.0,
            psi_hat: None,
            diss_hat: None,
            xi_hat,
            nr_iters: None,
        }
    }
}

/// A model's response along one strain path, row zero being the rest state.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    pub rows: Vec<TraceRow>,
}

impl PredictionTrace {
    pub fn n_internal(&self) -> usize {
        self.rows.first().map_or(0, |r| r.xi_hat.len())
    }

    /// Mean absolute stress error against reference states covering the same
    /// path, skipping the shared rest state.
    pub fn mae_sig(&self, reference: &[MaterialState]) -> Result<f64, ArchError> {
        if reference.len() != self.rows.len() || self.rows.len() < 2 {
            return Err(ArchError::Data(format!(
                "trace has {} rows, reference {} states",
                self.rows.len(),
                reference.len()
            )));
        }
        let n = self.rows.len() - 1;
        let sum: f64 = self
            .rows
            .iter()
            .zip(reference)
            .skip(1)
            .map(|(row, state)| (row.sig_hat - state.sig).abs())
            .sum();
        Ok(sum / n as f64)
    }

    /// Fraction of steps past the rest state whose reported dissipation is at
    /// least `-tolerance`; `None` when the model reports no dissipation.
    pub fn diss_nonneg_fraction(&self, tolerance: f64) -> Option<f64> {
        let reported: Vec<f64> = self
            .rows
            .iter()
            .skip(1)
            .filter_map(|r| r.diss_hat)
            .collect();
        if reported.is_empty() {
            return None;
        }
        let ok = reported.iter().filter(|&&d| d >= -tolerance).count();
        Some(ok as f64 / reported.len() as f64)
    }

    /// Steps past the rest state whose reported dissipation falls below
    /// `-tolerance`, as `(row index, dissipation)`.
    pub fn diss_violations(&self, tolerance: f64) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(i, r)| r.diss_hat.map(|d| (i, d)))
            .filter(|&(_, d)| d < -tolerance)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ArchError> {
        let n_xi = self.n_internal();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "eps".into(), "sig_hat".into()];
        header.push("psi_hat".into());
        header.push("diss_hat".into());
        for a in 1..=n_xi {
            header.push(format!("xi_hat{a}"));
        }
        header.push("nr_iters".into());
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut record = vec![
                row.t.to_string(),
                row.eps.to_string(),
                row.sig_hat.to_string(),
                row.psi_hat.map_or(String::new(), |v| v.to_string()),
                row.diss_hat.map_or(String::new(), |v| v.to_string()),
            ];
            for &x in &row.xi_hat {
                record.push(x.to_string());
            }
            record.push(row.nr_iters.map_or(String::new(), |v| v.to_string()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), ArchError> {
        self.write_csv(File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ArchError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(csv_err)?.clone();
        let n_cols = headers.len();
        if n_cols < 6 || &headers[0] != "t" || &headers[n_cols - 1] != "nr_iters" {
            return Err(ArchError::Data("unrecognized trace header".into()));
        }
        let n_xi = n_cols - 6;
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            if record.len() != n_cols {
                return Err(ArchError::Data("ragged trace row".into()));
            }
            let field = |i: usize| -> Result<f64, ArchError> {
                record[i]
                    .parse()
                    .map_err(|_| ArchError::Data(format!("bad number `{}`", &record[i])))
            };
            let optional = |i: usize| -> Result<Option<f64>, ArchError> {
                if record[i].is_empty() {
                    Ok(None)
                } else {
                    field(i).map(Some)
                }
            };
            let mut xi_hat = Vec::with_capacity(n_xi);
            for a in 0..n_xi {
                xi_hat.push(field(5 + a)?);
            }
            rows.push(TraceRow {
                t: field(0)?,
                eps: field(1)?,
                sig_hat: field(2)?,
                psi_hat: optional(3)?,
                diss_hat: optional(4)?,
                xi_hat,
                nr_iters: if record[n_cols - 1].is_empty() {
                    None
                } else {
                    Some(record[n_cols - 1].parse().map_err(|_| {
                        ArchError::Data(format!("bad iteration count `{}`", &record[n_cols - 1]))
                    })?)
                },
            });
        }
        Ok(PredictionTrace { rows })
    }

    pub fn read_csv_file(path: &Path) -> Result<Self, ArchError> {
        Self::read_csv(File::open(path)?)
    }
}

fn csv_err(e: csv::Error) -> ArchError {
    ArchError::Data(format!("trace csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PredictionTrace {
        PredictionTrace {
            rows: vec![
                TraceRow::rest(vec![0.0, 0.125]),
                TraceRow {
                    t: 0.05,
                    eps: 1e-3,
                    sig_hat: 0.987654321012345,
                    psi_hat: Some(1.5e-4),
                    diss_hat: Some(-3.0e-18),
                    xi_hat: vec![2.0e-4, -7.0e-5],
                    nr_iters: Some(4),
                },
                TraceRow {
                    t: 0.1,
                    eps: 2e-3,
                    sig_hat: 1.5,
                    psi_hat: Some(2.5e-4),
                    diss_hat: Some(1.0e-6),
                    xi_hat: vec![3.0e-4, -9.0e-5],
                    nr_iters: Some(2),
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = sample();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,eps,sig_hat,psi_hat,diss_hat,xi_hat1,xi_hat2,nr_iters"));
        let back = PredictionTrace::read_csv(&buf[..]).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn missing_quantities_serialize_as_empty_cells() {
        let trace = PredictionTrace {
            rows: vec![
                TraceRow::rest(vec![]),
                TraceRow {
                    t: 0.1,
                    eps: 1e-3,
                    sig_hat: 3.25,
                    psi_hat: None,
                    diss_hat: None,
                    xi_hat: vec![],
                    nr_iters: None,
                },
            ],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("0.1,0.001,3.25,,,\n"));
        let back = PredictionTrace::read_csv(&buf[..]).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn dissipation_screening_reports_violations() {
        let trace = sample();
        assert_eq!(trace.diss_nonneg_fraction(1e-10), Some(1.0));
        assert_eq!(trace.diss_nonneg_fraction(1e-20), Some(0.5));
        let violations = trace.diss_violations(1e-20);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].0, 1);
        let blackbox = PredictionTrace {
            rows: vec![TraceRow::rest(vec![]), TraceRow::rest(vec![])],
        };
        assert_eq!(blackbox.diss_nonneg_fraction(0.0), None);
    }

    #[test]
    fn stress_error_skips_the_rest_state() {
        use refmat::MaterialState;
        let trace = sample();
        let reference: Vec<MaterialState> = trace
            .rows
            .iter()
            .map(|r| MaterialState {
                t: r.t,
                eps: r.eps,
                sig: r.sig_hat + 0.5,
                xi: vec![],
                tau: vec![],
                psi: 0.0,
                diss: 0.0,
            })
            .collect();
        let mae = trace.mae_sig(&reference).unwrap();
        assert!((mae - 0.5).abs() < 1e-12);
        assert!(trace.mae_sig(&reference[..2]).is_err());
    }
}
