//! Dataset preparation and the end-to-end training pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use archzoo::{
    scale_database, sigma_tuples, ArchConfig, ArchError, ArchKind, Objective, ScaledSequence,
    TrainedModel,
};
use datagen::{gen_random_walk, gen_spline_path, spline_knots, Database, ScalingSet};
use serde::Serialize;
use trainer::{minimize, Eval, Minimized, OptimConfig, StopReason, TermSchema, TrainerError};

use crate::config::{xipsi_phase1_target, DataConfig, ExperimentConfig};
use crate::error::{CliError, CliResult};

/// Classify library failures: solver and value problems keep exit code 1,
/// anything that means "the request cannot run" gets exit code 2.
pub fn arch_err(e: ArchError) -> CliError {
    match e {
        ArchError::NonFinite { .. } | ArchError::NrDivergence { .. } => CliError::numeric(e),
        _ => CliError::config(e),
    }
}

fn trainer_err(e: TrainerError) -> CliError {
    match e {
        TrainerError::Config(_) | TrainerError::Shape(_) => CliError::config(e),
        _ => CliError::numeric(e),
    }
}

/// Directory a dataset lives in, keyed by material, kind, and seed.
pub fn dataset_dir(out_root: &Path, material: refmat::MaterialId, data: &DataConfig) -> PathBuf {
    out_root.join("data").join(format!(
        "{}-{}-s{}",
        material.as_str(),
        data.label(),
        data.seed()
    ))
}

/// Directory a training run writes its artifacts into.
pub fn run_dir(out_root: &Path, name: &str) -> PathBuf {
    out_root.join("runs").join(name)
}

fn generate_paths(data: &DataConfig) -> CliResult<Vec<refmat::StrainPath>> {
    match data {
        DataConfig::RandomWalk { walk } => gen_random_walk(walk).map_err(CliError::config),
        DataConfig::Spline {
            n_steps,
            dt_min,
            dt_max,
            seed,
        } => {
            let path = gen_spline_path(&spline_knots(), *dt_min, *dt_max, *n_steps, *seed)
                .map_err(CliError::config)?;
            Ok(vec![path])
        }
    }
}

/// Load the dataset from disk if present, otherwise simulate and persist it.
pub fn ensure_dataset(
    out_root: &Path,
    material: refmat::MaterialId,
    data: &DataConfig,
) -> CliResult<(Database, ScalingSet, PathBuf)> {
    let dir = dataset_dir(out_root, material, data);
    let csv_path = dir.join("dataset.csv");
    let scaling_path = dir.join("scaling.json");
    if csv_path.exists() && scaling_path.exists() {
        let db = Database::read_csv_file(material, &csv_path).map_err(CliError::config)?;
        let scaling = ScalingSet::read_json_file(&scaling_path).map_err(CliError::config)?;
        return Ok((db, scaling, dir));
    }
    let paths = generate_paths(data)?;
    let db = Database::build(material, &paths).map_err(CliError::numeric)?;
    let scaling = ScalingSet::fit(&db).map_err(CliError::numeric)?;
    fs::create_dir_all(&dir).map_err(CliError::numeric)?;
    db.write_csv_file(&csv_path).map_err(CliError::numeric)?;
    scaling
        .write_json_file(&scaling_path)
        .map_err(CliError::numeric)?;
    Ok((db, scaling, dir))
}

fn schema_of(obj: &Objective) -> CliResult<TermSchema> {
    TermSchema::new(
        obj.term_names().iter().map(|n| n.to_string()).collect(),
        obj.term_weights().to_vec(),
    )
    .map_err(trainer_err)
}

pub fn as_eval(obj: &mut Objective, theta: &[f64]) -> Eval {
    let (breakdown, grad) = obj.eval(theta);
    Eval {
        terms: breakdown.terms.iter().map(|t| t.value).collect(),
        total: breakdown.total,
        grad,
    }
}

fn run_phase(obj: &mut Objective, theta0: &[f64], optim: &OptimConfig) -> CliResult<Minimized> {
    let schema = schema_of(obj)?;
    minimize(|theta| as_eval(obj, theta), theta0, &schema, optim).map_err(trainer_err)
}

/// Deterministic training metrics: everything in the report except timing.
#[derive(Debug, Serialize)]
pub struct TrainMetrics {
    pub name: String,
    pub material: String,
    pub arch: String,
    pub term_names: Vec<String>,
    pub term_weights: Vec<f64>,
    pub final_terms: Vec<f64>,
    pub final_loss: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

/// A finished training run with its artifacts on disk.
pub struct RunArtifacts {
    pub model: TrainedModel,
    pub runs: Vec<Minimized>,
    pub dir: PathBuf,
}

impl RunArtifacts {
    /// Report of the last (or only) optimization phase.
    pub fn report(&self) -> &trainer::TrainReport {
        &self.runs.last().expect("at least one phase").report
    }
}

fn single_objective(
    cfg: &ExperimentConfig,
    db: &Database,
    scaling: &ScalingSet,
    seqs: &[ScaledSequence],
) -> CliResult<Objective> {
    let arch = &cfg.arch;
    match arch {
        ArchConfig::FnnSigma {
            n_prec,
            rate_dependent,
            ..
        } => {
            let tuples = sigma_tuples(db, scaling, *n_prec, *rate_dependent, cfg.max_tuples)
                .map_err(arch_err)?;
            Objective::fnn_sigma(arch, &tuples).map_err(arch_err)
        }
        ArchConfig::RnnSigma { .. } => Objective::rnn_sigma(arch, seqs).map_err(arch_err),
        ArchConfig::RnnXiPsi { .. } => Objective::rnn_xipsi(arch, seqs).map_err(arch_err),
        ArchConfig::FnnPsiPhi { .. } => {
            Objective::fnn_psiphi(arch, seqs, cfg.max_tuples).map_err(arch_err)
        }
        ArchConfig::FnnPsiPhiStar { .. } => {
            Objective::fnn_psiphistar(arch, seqs, cfg.max_tuples).map_err(arch_err)
        }
        ArchConfig::FnnPsiPhiXi { .. } => Objective::fnn_psiphixi(arch, seqs).map_err(arch_err),
        ArchConfig::FnnXiPsi { .. } => unreachable!("two-phase training handles this kind"),
    }
}

/// Train one experiment and write every artifact under the output root.
///
/// The internal-variable/energy architecture trains in two phases: first the
/// stepping net against the recorded internal variables, then the energy net
/// with the stepper frozen. All other architectures train in one phase.
pub fn train_experiment(cfg: &ExperimentConfig, out_root: &Path) -> CliResult<RunArtifacts> {
    cfg.validate()?;
    let (db, scaling, _) = ensure_dataset(out_root, cfg.material, &cfg.data)?;
    if cfg.arch.kind().needs_xi_columns() && db.n_internal() == 0 {
        return Err(CliError::Config(format!(
            "{} needs internal-variable columns, but the dataset has none",
            cfg.arch.kind()
        )));
    }
    let seqs = scale_database(&db, &scaling);
    let theta0 = cfg.arch.init_params(cfg.seed);
    let mut optim = cfg.optim.clone();
    optim.seed = cfg.seed;

    let (params, runs) = if cfg.arch.kind() == ArchKind::FnnXiPsi {
        let (_, stepper_range) = cfg.arch.net("stepper").map_err(arch_err)?;
        let (_, energy_range) = cfg.arch.net("energy").map_err(arch_err)?;

        let mut stepper_obj =
            Objective::fnn_xipsi_stepper(&cfg.arch, &seqs, cfg.max_tuples).map_err(arch_err)?;
        let mut phase1_optim = optim.clone();
        phase1_optim.target = xipsi_phase1_target(cfg.material);
        let phase1 = run_phase(&mut stepper_obj, &theta0[stepper_range.clone()], &phase1_optim)?;

        let mut energy_obj =
            Objective::fnn_xipsi_energy(&cfg.arch, &seqs, cfg.max_tuples, &phase1.theta)
                .map_err(arch_err)?;
        let phase2 = run_phase(&mut energy_obj, &theta0[energy_range.clone()], &optim)?;

        let mut params = theta0.clone();
        params[stepper_range].copy_from_slice(&phase1.theta);
        params[energy_range].copy_from_slice(&phase2.theta);
        (params, vec![phase1, phase2])
    } else {
        let mut obj = single_objective(cfg, &db, &scaling, &seqs)?;
        let run = run_phase(&mut obj, &theta0, &optim)?;
        (run.theta.clone(), vec![run])
    };

    let loss_log: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.trajectory.iter().map(|p| p.total))
        .collect();
    let iterations = runs.iter().map(|r| r.report.iterations).sum();
    let model = TrainedModel {
        material: cfg.material,
        config: cfg.arch.clone(),
        scaling,
        seed: cfg.seed,
        params,
        loss_log,
        iterations,
    };

    let dir = run_dir(out_root, &cfg.name);
    fs::create_dir_all(&dir).map_err(CliError::numeric)?;
    cfg.write_toml_file(&dir.join("config.toml"))?;
    model
        .write_json_file(&dir.join("model.json"))
        .map_err(arch_err)?;
    for (i, run) in runs.iter().enumerate() {
        let suffix = if runs.len() > 1 {
            format!("-phase{}", i + 1)
        } else {
            String::new()
        };
        run.report
            .write_json_file(&dir.join(format!("report{suffix}.json")))
            .map_err(trainer_err)?;
        run.write_trajectory_csv_file(&dir.join(format!("trajectory{suffix}.csv")))
            .map_err(trainer_err)?;
    }
    let last = runs.last().expect("at least one phase");
    let metrics = TrainMetrics {
        name: cfg.name.clone(),
        material: cfg.material.as_str().to_string(),
        arch: cfg.arch.kind().as_str().to_string(),
        term_names: last.report.term_names.clone(),
        term_weights: last.report.term_weights.clone(),
        final_terms: last.report.final_terms.clone(),
        final_loss: last.report.final_loss,
        iterations,
        stop: last.report.stop,
    };
    let metrics_json = serde_json::to_string_pretty(&metrics).map_err(CliError::numeric)?;
    fs::write(dir.join("metrics.json"), metrics_json).map_err(CliError::numeric)?;

    Ok(RunArtifacts { model, runs, dir })
}

/// Reuse an existing checkpoint when its artifacts are already on disk.
pub fn train_if_missing(cfg: &ExperimentConfig, out_root: &Path) -> CliResult<TrainedModel> {
    let model_path = run_dir(out_root, &cfg.name).join("model.json");
    if model_path.exists() {
        if let Ok(model) = TrainedModel::read_json_file(&model_path) {
            if model.material == cfg.material && model.config == cfg.arch {
                return Ok(model);
            }
        }
    }
    Ok(train_experiment(cfg, out_root)?.model)
}
