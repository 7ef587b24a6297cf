//! Named bundles that rebuild the study's validation figures from scratch:
//! train (or reuse) the involved checkpoints, roll them out on the relevant
//! validation paths, and drop traces plus metrics under one directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::experiment_preset;
use crate::error::{CliError, CliResult};
use crate::experiment::train_if_missing;
use crate::validate::{validate_model, ValPath, ValidationMetrics};

const PATH_A: &[ValPath] = &[ValPath::A];
const PATH_B: &[ValPath] = &[ValPath::B];
const PATHS_AB: &[ValPath] = &[ValPath::A, ValPath::B];

/// One reproducible figure: the checkpoints it needs and the validation
/// paths each one is rolled out on.
#[derive(Debug)]
pub struct FigureSpec {
    pub id: &'static str,
    pub summary: &'static str,
    pub entries: &'static [(&'static str, &'static [ValPath])],
}

/// The figure catalogue. Interpolation rollouts come first, one figure per
/// architecture; the closing figures compare extrapolation behavior.
pub const FIGURES: &[FigureSpec] = &[
    FigureSpec {
        id: "fig9",
        summary: "reduced black-box stress model on the interpolation path",
        entries: &[
            ("v1-fnn-sigma", PATH_A),
            ("v2-fnn-sigma", PATH_A),
            ("v2-fnn-sigma-npt2", PATH_A),
            ("p1-fnn-sigma", PATH_A),
            ("p2-fnn-sigma", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig10",
        summary: "recurrent black-box stress model on the interpolation path",
        entries: &[
            ("v1-rnn-sigma", PATH_A),
            ("v2-rnn-sigma", PATH_A),
            ("p1-rnn-sigma", PATH_A),
            ("p2-rnn-sigma", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig11",
        summary: "feedforward internal-variable energy model on the interpolation path",
        entries: &[
            ("v1-fnn-xipsi", PATH_A),
            ("v2-fnn-xipsi", PATH_A),
            ("p1-fnn-xipsi", PATH_A),
            ("p2-fnn-xipsi", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig12",
        summary: "recurrent internal-variable energy model on the interpolation path",
        entries: &[
            ("v1-rnn-xipsi", PATH_A),
            ("v2-rnn-xipsi", PATH_A),
            ("p1-rnn-xipsi", PATH_A),
            ("p2-rnn-xipsi", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig13",
        summary: "generalized standard material model on the interpolation path",
        entries: &[
            ("v1-fnn-psiphi", PATH_A),
            ("v2-fnn-psiphi", PATH_A),
            ("p1-fnn-psiphi", PATH_A),
            ("p2-fnn-psiphi", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig14",
        summary: "dual-potential standard material model on the interpolation path",
        entries: &[
            ("v1-fnn-psiphistar", PATH_A),
            ("v2-fnn-psiphistar", PATH_A),
            ("p1-fnn-psiphistar", PATH_A),
            ("p2-fnn-psiphistar", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig15",
        summary: "standard material model with auxiliary rate network on the interpolation path",
        entries: &[
            ("v1-fnn-psiphixi", PATH_A),
            ("v2-fnn-psiphixi", PATH_A),
            ("p1-fnn-psiphixi", PATH_A),
            ("p2-fnn-psiphixi", PATH_A),
        ],
    },
    FigureSpec {
        id: "fig16",
        summary: "dissipation screening of the internal-variable energy models",
        entries: &[("v1-fnn-xipsi", PATHS_AB), ("v1-rnn-xipsi", PATHS_AB)],
    },
    FigureSpec {
        id: "fig17",
        summary: "potential-based models on the extrapolation path",
        entries: &[
            ("v1-fnn-psiphi", PATH_B),
            ("v1-fnn-psiphistar", PATH_B),
            ("v1-fnn-psiphixi", PATH_B),
        ],
    },
    FigureSpec {
        id: "fig18",
        summary: "six-architecture extrapolation comparison",
        entries: &[
            ("v1-fnn-sigma", PATH_B),
            ("v1-rnn-sigma", PATH_B),
            ("v1-fnn-xipsi", PATH_B),
            ("v1-rnn-xipsi", PATH_B),
            ("v1-fnn-psiphi", PATH_B),
            ("v1-fnn-psiphistar", PATH_B),
        ],
    },
];

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

pub fn figure(id: &str) -> CliResult<&'static FigureSpec> {
    FIGURES.iter().find(|f| f.id == id).ok_or_else(|| {
        CliError::Config(format!(
            "unknown figure '{id}', expected one of {} or 'all'",
            figure_ids().join(", ")
        ))
    })
}

/// What one figure bundle produced, one row per rollout.
#[derive(Debug, Serialize)]
pub struct BundleEntry {
    pub preset: String,
    pub path: String,
    pub trace_file: String,
    pub metrics_file: String,
    pub stress_mae_mpa: f64,
    pub stress_mae_pct_of_range: f64,
}

#[derive(Debug, Serialize)]
pub struct Bundle {
    pub figure: String,
    pub summary: String,
    pub entries: Vec<BundleEntry>,
}

/// Rebuilds one figure. Checkpoints are trained on demand and shared across
/// figures through the output root, so `all` trains each preset only once.
pub fn reproduce_figure(spec: &FigureSpec, out_root: &Path) -> CliResult<Bundle> {
    let dir = out_root.join("reproduce").join(spec.id);
    fs::create_dir_all(&dir)?;
    let mut entries = Vec::new();
    for &(preset, paths) in spec.entries {
        let cfg = experiment_preset(preset)?;
        let model = train_if_missing(&cfg, out_root)?;
        for &vpath in paths {
            let (trace, metrics) = validate_model(&model, vpath)?;
            let trace_file = format!("{preset}-path-{vpath}.trace.csv");
            let metrics_file = format!("{preset}-path-{vpath}.metrics.json");
            trace
                .write_csv_file(&dir.join(&trace_file))
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_metrics(&dir.join(&metrics_file), &metrics)?;
            entries.push(BundleEntry {
                preset: preset.to_string(),
                path: vpath.as_str().to_string(),
                trace_file,
                metrics_file,
                stress_mae_mpa: metrics.stress_mae_mpa,
                stress_mae_pct_of_range: metrics.stress_mae_pct_of_range,
            });
        }
    }
    let bundle = Bundle {
        figure: spec.id.to_string(),
        summary: spec.summary.to_string(),
        entries,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&bundle)? + "\n",
    )?;
    Ok(bundle)
}

pub fn write_metrics(path: &PathBuf, metrics: &ValidationMetrics) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(metrics)? + "\n")?;
    Ok(())
}

/// Entry point for the `reproduce` verb: a figure id or `all`.
pub fn reproduce(id: &str, out_root: &Path) -> CliResult<Vec<Bundle>> {
    let specs: Vec<&FigureSpec> = if id == "all" {
        FIGURES.iter().collect()
    } else {
        vec![figure(id)?]
    };
    specs
        .into_iter()
        .map(|spec| reproduce_figure(spec, out_root))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registry_entry_names_a_real_preset() {
        for spec in FIGURES {
            assert!(!spec.entries.is_empty(), "{} lists no runs", spec.id);
            for (preset, paths) in spec.entries {
                experiment_preset(preset).unwrap();
                assert!(!paths.is_empty());
            }
        }
    }

    #[test]
    fn unknown_figures_are_configuration_errors() {
        let err = figure("fig99").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fig18"));
    }
}
