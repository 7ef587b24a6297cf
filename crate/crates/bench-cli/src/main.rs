use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bench_cli::config::{
    build_experiment, experiment_preset, parse_arch, parse_material, preset_names, DataConfig,
    ExperimentConfig, DATA_SEED,
};
use bench_cli::error::{CliError, CliResult};
use bench_cli::experiment::{ensure_dataset, train_experiment};
use bench_cli::figures::reproduce;
use bench_cli::selftest::run_selftest;
use bench_cli::validate::{validate_model, ValPath};

/// Environment variable naming the output root when `--out` is absent.
const OUT_ENV: &str = "BENCH_OUT_ROOT";
const DEFAULT_OUT: &str = "bench-out";

#[derive(Parser)]
#[command(
    name = "bench-cli",
    about = "Train and evaluate neural constitutive models against analytic references"
)]
struct Cli {
    /// Output root for datasets, checkpoints, and reproduction bundles
    /// (falls back to $BENCH_OUT_ROOT, then ./bench-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and persist a training dataset with its scaling.
    Generate {
        /// Reference material: v1, v2, p1, or p2.
        #[arg(long)]
        material: String,
        /// Dataset kind: random-walk or spline.
        #[arg(long, default_value = "random-walk")]
        kind: String,
        #[arg(long, default_value_t = DATA_SEED)]
        seed: u64,
    },
    /// Train one experiment from a preset, a config file, or material+arch.
    Train {
        /// TOML experiment file; overrides --preset and --material/--arch.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named preset, e.g. v1-fnn-sigma (see `train --preset help`).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        material: Option<String>,
        /// Architecture kind, e.g. fnn-sigma, rnn-xipsi, fnn-psiphi.
        #[arg(long)]
        arch: Option<String>,
        /// Overrides the preset or file seed when given.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Roll a trained checkpoint out on a validation path and score it.
    Validate {
        /// Checkpoint file (model.json) or the run directory containing it.
        checkpoint: PathBuf,
        /// Validation path: a (interpolation) or b (extrapolation).
        #[arg(long, default_value = "a")]
        path: String,
    },
    /// Retrain and roll out everything behind one figure (fig9..fig18, all).
    Reproduce { figure: String },
    /// Run the no-training acceptance criteria and print one line each.
    Selftest,
}

fn out_root(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn train_config(
    config: Option<PathBuf>,
    preset: Option<String>,
    material: Option<String>,
    arch: Option<String>,
    seed: Option<u64>,
) -> CliResult<ExperimentConfig> {
    let mut cfg = if let Some(path) = config {
        ExperimentConfig::read_toml_file(&path)?
    } else if let Some(name) = preset {
        experiment_preset(&name)?
    } else if let (Some(material), Some(arch)) = (material.as_deref(), arch.as_deref()) {
        build_experiment(parse_material(material)?, parse_arch(arch)?)
    } else {
        return Err(CliError::Config(format!(
            "nothing to train: pass --config FILE, --preset NAME, or both \
             --material and --arch (presets: {})",
            preset_names().join(", ")
        )));
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let out = out_root(&cli.out);
    match cli.command {
        Command::Generate {
            material,
            kind,
            seed,
        } => {
            let material = parse_material(&material)?;
            let data = match kind.to_ascii_lowercase().as_str() {
                "random-walk" => DataConfig::default_walk(seed),
                "spline" => DataConfig::default_spline(seed),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown dataset kind '{other}', expected random-walk or spline"
                    )))
                }
            };
            let (db, _, dir) = ensure_dataset(&out, material, &data)?;
            println!(
                "dataset: {} sequences x {} steps for {} at {}",
                db.sequences.len(),
                db.sequences.first().map_or(0, |s| s.steps.len()),
                material.as_str(),
                dir.display()
            );
        }
        Command::Train {
            config,
            preset,
            material,
            arch,
            seed,
        } => {
            let cfg = train_config(config, preset, material, arch, seed)?;
            let arts = train_experiment(&cfg, &out)?;
            let report = arts.report();
            println!(
                "trained {}: loss {:.3e} after {} iterations ({:?}), checkpoint at {}",
                cfg.name,
                report.final_loss,
                arts.model.iterations,
                report.stop,
                arts.dir.display()
            );
        }
        Command::Validate { checkpoint, path } => {
            let vpath: ValPath = path.parse()?;
            let file = if checkpoint.is_dir() {
                checkpoint.join("model.json")
            } else {
                checkpoint.clone()
            };
            let model = archzoo::TrainedModel::read_json_file(&file)
                .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
            let (trace, metrics) = validate_model(&model, vpath)?;
            let dir = file.parent().expect("checkpoint has a directory");
            let trace_file = dir.join(format!("trace-path-{vpath}.csv"));
            let metrics_file = dir.join(format!("metrics-path-{vpath}.json"));
            trace
                .write_csv_file(&trace_file)
                .map_err(|e| CliError::Config(e.to_string()))?;
            std::fs::write(
                &metrics_file,
                serde_json::to_string_pretty(&metrics)? + "\n",
            )?;
            println!(
                "{} on path {}: stress MAE {:.3} MPa ({:.2}% of range), {} dissipation flags; wrote {}",
                metrics.arch,
                vpath,
                metrics.stress_mae_mpa,
                metrics.stress_mae_pct_of_range,
                metrics.diss_violation_steps.len(),
                trace_file.display()
            );
        }
        Command::Reproduce { figure } => {
            let bundles = reproduce(&figure, &out)?;
            for b in &bundles {
                for e in &b.entries {
                    println!(
                        "{}: {} path {} -> MAE {:.3} MPa ({:.2}% of range)",
                        b.figure, e.preset, e.path, e.stress_mae_mpa, e.stress_mae_pct_of_range
                    );
                }
            }
        }
        Command::Selftest => {
            let results = run_selftest();
            let mut failed = false;
            for r in &results {
                println!("{}", r.line());
                failed |= !r.pass;
            }
            if failed {
                return Err(CliError::Numeric("selftest criteria failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
