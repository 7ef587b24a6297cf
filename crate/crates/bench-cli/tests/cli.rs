//! End-to-end checks of the command-line surface: argument handling, exit
//! codes, and the artifact layout each verb leaves behind.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use archzoo::ArchKind;
use bench_cli::config::{build_experiment, DataConfig, ExperimentConfig};
use bench_cli::experiment::dataset_dir;
use datagen::{RandomWalkConfig, ScalingSet};
use refmat::MaterialId;
use trainer::Method;

fn bench(out_root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench-cli"))
        .arg("--out")
        .arg(out_root)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A config small enough that training finishes in well under a second.
fn micro_config(name: &str) -> ExperimentConfig {
    let mut cfg = build_experiment(MaterialId::V1, ArchKind::FnnSigma);
    cfg.name = name.to_string();
    cfg.data = DataConfig::RandomWalk {
        walk: RandomWalkConfig {
            n_sequences: 4,
            n_steps: 12,
            seed: 3,
            ..Default::default()
        },
    };
    cfg.max_tuples = Some(40);
    cfg.optim.method = Method::AdaptiveFirstOrder;
    cfg.optim.max_iters = 30;
    cfg.optim.grad_check_samples = 0;
    cfg.optim.target = None;
    cfg
}

#[test]
fn rejects_unknown_material_with_usage_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(tmp.path(), &["generate", "--material", "q3"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    let err = stderr_of(&out);
    for label in ["v1", "v2", "p1", "p2"] {
        assert!(err.contains(label), "missing {label} in: {err}");
    }
}

#[test]
fn rejects_unknown_figure_with_usage_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(tmp.path(), &["reproduce", "fig99"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("fig9"), "stderr: {}", stderr_of(&out));
}

#[test]
fn train_without_selection_lists_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(tmp.path(), &["train"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("v1-fnn-sigma"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn generate_persists_dataset_and_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(
        tmp.path(),
        &["generate", "--material", "v2", "--seed", "11"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let dir = dataset_dir(tmp.path(), MaterialId::V2, &DataConfig::default_walk(11));
    assert!(dir.join("dataset.csv").exists());
    assert!(dir.join("scaling.json").exists());
    assert!(stdout_of(&out).contains("100 sequences"));
}

#[test]
fn train_validate_round_trip_with_deterministic_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = micro_config("micro-v1-fnn-sigma");
    let cfg_path = tmp.path().join("micro.toml");
    cfg.write_toml_file(&cfg_path).unwrap();

    let out = bench(tmp.path(), &["train", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("trained micro-v1-fnn-sigma"));

    let run = tmp.path().join("runs").join("micro-v1-fnn-sigma");
    for file in [
        "model.json",
        "config.toml",
        "report.json",
        "trajectory.csv",
        "metrics.json",
    ] {
        assert!(run.join(file).exists(), "missing artifact {file}");
    }
    let first = fs::read(run.join("metrics.json")).unwrap();

    let rerun = bench(tmp.path(), &["train", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(rerun.status.code(), Some(0), "stderr: {}", stderr_of(&rerun));
    let second = fs::read(run.join("metrics.json")).unwrap();
    assert_eq!(first, second, "same config must reproduce identical metrics");

    let val = bench(tmp.path(), &["validate", run.to_str().unwrap()]);
    assert_eq!(val.status.code(), Some(0), "stderr: {}", stderr_of(&val));
    assert!(run.join("trace-path-a.csv").exists());
    assert!(run.join("metrics-path-a.json").exists());
    assert!(stdout_of(&val).contains("on path a"));

    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("metrics-path-a.json")).unwrap()).unwrap();
    assert_eq!(metrics["material"], "v1");
    assert_eq!(metrics["path"], "a");
    assert!(metrics["stress_mae_mpa"].as_f64().unwrap().is_finite());
}

#[test]
fn seed_override_changes_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = micro_config("micro-seeded");
    let cfg_path = tmp.path().join("micro.toml");
    cfg.write_toml_file(&cfg_path).unwrap();
    let run = tmp.path().join("runs").join("micro-seeded");

    let out = bench(tmp.path(), &["train", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let first = fs::read_to_string(run.join("model.json")).unwrap();

    let out = bench(
        tmp.path(),
        &[
            "train",
            "--config",
            cfg_path.to_str().unwrap(),
            "--seed",
            "99",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let second = fs::read_to_string(run.join("model.json")).unwrap();
    assert_ne!(first, second, "a different seed must move the parameters");
}

#[test]
fn internal_variable_architectures_require_xi_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = micro_config("micro-psiphi");
    cfg.arch = archzoo::preset(ArchKind::FnnPsiPhi, MaterialId::V1);

    // Plant a dataset without internal-variable columns where the trainer
    // will look for it, so the run must be refused as unusable input.
    let dir = dataset_dir(tmp.path(), cfg.material, &cfg.data);
    fs::create_dir_all(&dir).unwrap();
    fs::write(
        dir.join("dataset.csv"),
        "seq,step,t,dt,eps,sig,psi,diss\n\
         0,0,0.0,0.05,0.0,0.0,0.0,0.0\n\
         0,1,0.05,0.05,0.001,1.0,0.0005,0.0\n\
         0,2,0.1,0.05,0.002,2.0,0.002,0.0\n",
    )
    .unwrap();
    ScalingSet::from_extrema(0.02, 0.1, 1.0)
        .unwrap()
        .write_json_file(&dir.join("scaling.json"))
        .unwrap();

    let cfg_path = tmp.path().join("psiphi.toml");
    cfg.write_toml_file(&cfg_path).unwrap();
    let out = bench(tmp.path(), &["train", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("internal"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn validate_rejects_missing_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(tmp.path(), &["validate", "no/such/model.json"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn selftest_reports_every_criterion() {
    // The full run lives in the release binary and the acceptance suite;
    // here only the reporting shape is checked via the cheapest criteria.
    let results = bench_cli::selftest::run_selftest_subset(&[1, 8]);
    assert_eq!(results.len(), 2);
    for r in &results {
        assert!(r.pass, "{}", r.line());
        assert!(r.line().contains(&format!("[criterion {}]", r.id)));
    }
}
