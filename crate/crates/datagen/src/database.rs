//! Reference databases: simulated sequences, CSV storage, window extraction.

use std::io::{Read, Write};
use std::path::Path;

use refmat::{Material, MaterialId, MaterialState, StrainPath};

use crate::error::DatagenError;

/// One recorded state of a sequence. The first entry of every sequence is the
/// rest state (everything zero, `dt = 0`); for later entries `dt` spans the
/// increment that produced the state.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqStep {
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub sig: f64,
    pub xi: Vec<f64>,
    pub psi: f64,
    pub diss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub steps: Vec<SeqStep>,
}

impl Sequence {
    pub fn from_states(states: &[MaterialState]) -> Self {
        let mut steps = Vec::with_capacity(states.len());
        let mut prev_t = 0.0;
        for (i, s) in states.iter().enumerate() {
            steps.push(SeqStep {
                t: s.t,
                dt: if i == 0 { 0.0 } else { s.t - prev_t },
                eps: s.eps,
                sig: s.sig,
                xi: s.xi.clone(),
                psi: s.psi,
                diss: s.diss,
            });
            prev_t = s.t;
        }
        Sequence { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A set of sequences of one material.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub material: MaterialId,
    pub sequences: Vec<Sequence>,
}

impl Database {
    /// Simulate every path with the material and collect the sequences.
    pub fn build(material: MaterialId, paths: &[StrainPath]) -> Result<Self, DatagenError> {
        let mat = Material::from_id(material);
        let sequences = paths
            .iter()
            .map(|p| Ok(Sequence::from_states(&mat.simulate(p)?)))
            .collect::<Result<Vec<_>, DatagenError>>()?;
        Ok(Database {
            material,
            sequences,
        })
    }

    pub fn n_internal(&self) -> usize {
        self.sequences
            .first()
            .and_then(|s| s.steps.first())
            .map_or(0, |s| s.xi.len())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatagenError> {
        let mut w = csv::Writer::from_writer(out);
        let n_xi = self.n_internal();
        let mut header = vec![
            "seq".to_string(),
            "step".to_string(),
            "t".to_string(),
            "dt".to_string(),
            "eps".to_string(),
            "sig".to_string(),
        ];
        for k in 1..=n_xi {
            header.push(format!("xi{k}"));
        }
        header.push("psi".to_string());
        header.push("diss".to_string());
        w.write_record(&header)?;
        for (si, seq) in self.sequences.iter().enumerate() {
            for (ni, s) in seq.steps.iter().enumerate() {
                let mut rec = vec![
                    si.to_string(),
                    ni.to_string(),
                    fmt_f64(s.t),
                    fmt_f64(s.dt),
                    fmt_f64(s.eps),
                    fmt_f64(s.sig),
                ];
                for &x in &s.xi {
                    rec.push(fmt_f64(x));
                }
                rec.push(fmt_f64(s.psi));
                rec.push(fmt_f64(s.diss));
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(DatagenError::Io)?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), DatagenError> {
        let file = std::fs::File::create(path).map_err(DatagenError::Io)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(material: MaterialId, input: R) -> Result<Self, DatagenError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let fixed_lead = ["seq", "step", "t", "dt", "eps", "sig"];
        if cols.len() < fixed_lead.len() + 2 || cols[..fixed_lead.len()] != fixed_lead {
            return Err(DatagenError::Parse(format!(
                "unexpected database header: {cols:?}"
            )));
        }
        let n_xi = cols.len() - fixed_lead.len() - 2;
        if cols[cols.len() - 2] != "psi" || cols[cols.len() - 1] != "diss" {
            return Err(DatagenError::Parse(
                "database header must end with psi,diss".into(),
            ));
        }

        let mut sequences: Vec<Sequence> = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64, DatagenError> {
                record
                    .get(i)
                    .ok_or_else(|| DatagenError::Parse("short record".into()))?
                    .parse::<f64>()
                    .map_err(|e| DatagenError::Parse(e.to_string()))
            };
            let seq: usize = record
                .get(0)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DatagenError::Parse("bad seq index".into()))?;
            let step: usize = record
                .get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DatagenError::Parse("bad step index".into()))?;
            if seq == sequences.len() && step == 0 {
                sequences.push(Sequence { steps: Vec::new() });
            }
            let is_last = seq + 1 == sequences.len();
            let current = sequences
                .last_mut()
                .filter(|s| is_last && step == s.len())
                .ok_or_else(|| {
                    DatagenError::Parse(format!("rows out of order at seq {seq}, step {step}"))
                })?;
            let mut xi = Vec::with_capacity(n_xi);
            for k in 0..n_xi {
                xi.push(field(6 + k)?);
            }
            current.steps.push(SeqStep {
                t: field(2)?,
                dt: field(3)?,
                eps: field(4)?,
                sig: field(5)?,
                xi,
                psi: field(6 + n_xi)?,
                diss: field(7 + n_xi)?,
            });
        }
        if sequences.is_empty() {
            return Err(DatagenError::Parse("database has no rows".into()));
        }
        Ok(Database {
            material,
            sequences,
        })
    }

    pub fn read_csv_file(material: MaterialId, path: &Path) -> Result<Self, DatagenError> {
        let file = std::fs::File::open(path).map_err(DatagenError::Io)?;
        Self::read_csv(material, std::io::BufReader::new(file))
    }
}

/// Shortest decimal representation that parses back to the same bits.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// One stress-prediction window: the strain at the predicted step plus the
/// trailing history of the `n_prec` preceding steps, most recent first. Each
/// history entry carries the strain and stress at that step and the time
/// increment leading from it toward the next one, so `history[0].2` is the
/// increment of the predicted step itself.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnTuple {
    pub eps_next: f64,
    pub history: Vec<(f64, f64, f64)>,
    pub sig_next: f64,
}

/// Extract all windows that fit inside sequence boundaries. A sequence of
/// `L` states yields `L - n_prec` tuples.
pub fn to_fnn_tuples(sequences: &[Sequence], n_prec: usize) -> Vec<FnnTuple> {
    assert!(n_prec >= 1, "windows need at least one preceding step");
    let mut tuples = Vec::new();
    for seq in sequences {
        if seq.len() <= n_prec {
            continue;
        }
        for next in n_prec..seq.len() {
            let mut history = Vec::with_capacity(n_prec);
            for m in (next - n_prec..next).rev() {
                let s = &seq.steps[m];
                history.push((s.eps, s.sig, seq.steps[m + 1].dt));
            }
            tuples.push(FnnTuple {
                eps_next: seq.steps[next].eps,
                history,
                sig_next: seq.steps[next].sig,
            });
        }
    }
    tuples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{gen_random_walk, RandomWalkConfig};

    fn small_db() -> Database {
        let cfg = RandomWalkConfig {
            n_sequences: 3,
            n_steps: 10,
            seed: 5,
            ..RandomWalkConfig::default()
        };
        Database::build(MaterialId::V2, &gen_random_walk(&cfg).unwrap()).unwrap()
    }

    #[test]
    fn sequences_start_at_rest_and_count_states() {
        let db = small_db();
        assert_eq!(db.sequences.len(), 3);
        for seq in &db.sequences {
            assert_eq!(seq.len(), 11);
            let first = &seq.steps[0];
            assert_eq!(first.t, 0.0);
            assert_eq!(first.dt, 0.0);
            assert_eq!(first.eps, 0.0);
            assert_eq!(first.sig, 0.0);
            assert!(first.xi.iter().all(|&x| x == 0.0));
        }
        assert_eq!(db.n_internal(), 2);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let db = small_db();
        let mut buf = Vec::new();
        db.write_csv(&mut buf).unwrap();
        let back = Database::read_csv(MaterialId::V2, buf.as_slice()).unwrap();
        assert_eq!(db, back);
    }

    #[test]
    fn rejects_foreign_header() {
        let text = "a,b,c\n1,2,3\n";
        assert!(Database::read_csv(MaterialId::V1, text.as_bytes()).is_err());
    }

    #[test]
    fn window_counts_match_sequence_length() {
        let db = small_db();
        // 11 states per sequence.
        assert_eq!(to_fnn_tuples(&db.sequences, 1).len(), 3 * 10);
        assert_eq!(to_fnn_tuples(&db.sequences, 2).len(), 3 * 9);
        // A bare 100-state sequence gives 99 and 98 windows.
        let cfg = RandomWalkConfig {
            n_sequences: 1,
            n_steps: 99,
            seed: 9,
            ..RandomWalkConfig::default()
        };
        let db100 = Database::build(MaterialId::P1, &gen_random_walk(&cfg).unwrap()).unwrap();
        assert_eq!(db100.sequences[0].len(), 100);
        assert_eq!(to_fnn_tuples(&db100.sequences, 1).len(), 99);
        assert_eq!(to_fnn_tuples(&db100.sequences, 2).len(), 98);
    }

    #[test]
    fn windows_carry_leading_increments() {
        let db = small_db();
        let seq = &db.sequences[0];
        let tuples = to_fnn_tuples(std::slice::from_ref(seq), 2);
        // First window predicts step 2 from steps 1 and 0.
        let t0 = &tuples[0];
        assert_eq!(t0.eps_next, seq.steps[2].eps);
        assert_eq!(t0.sig_next, seq.steps[2].sig);
        assert_eq!(t0.history[0], (seq.steps[1].eps, seq.steps[1].sig, seq.steps[2].dt));
        assert_eq!(t0.history[1], (seq.steps[0].eps, seq.steps[0].sig, seq.steps[1].dt));
    }
}
