//! Acceptance gate for the whole benchmark, one test per criterion, each
//! printing a single pass/fail line (run with `--nocapture` to see them all).
//!
//! Two tiers. The default tier needs no training and finishes in minutes:
//! analytic oracles, the structural dissipation guarantee, normalization
//! anchors, gradient checks, violation screening, and scaling identities.
//! The `#[ignore]`d reproduction tier trains real checkpoints and asserts
//! the headline quantitative and qualitative findings; run it with
//! `cargo test -p bench-cli --test acceptance -- --ignored --nocapture`.
//! Checkpoints land under `$BENCH_OUT_ROOT` (default `target/acceptance-out`)
//! and are reused on later runs.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use archzoo::{PredictionTrace, TrainedModel};
use bench_cli::config::experiment_preset;
use bench_cli::experiment::{run_dir, train_if_missing};
use bench_cli::selftest::run_selftest_subset;
use bench_cli::validate::{validate_model, ValPath, ValidationMetrics, DISS_TOLERANCE_SCALED};
use datagen::build_extrapolation_path;
use refmat::Material;

/// Loss bounds of the training-reproduction criterion. The study's own
/// numbers are tighter; these allow an order of magnitude of optimizer slack.
const LOSS_BOUND_FNN_SIGMA_V1: f64 = 1e-3;
const LOSS_BOUND_RNN_SIGMA_P2: f64 = 1e-2;
const LOSS_BOUND_PSIPHI_V2_SIG: f64 = 1e-3;
const ITERATION_BUDGET: u64 = 10_000;
const TRAIN_WALL_CAP_S: f64 = 1800.0;

/// Ratio gates of the qualitative-findings criterion.
const NPT2_GAIN: f64 = 3.0;
const P2_OVER_P1: f64 = 5.0;
const DUAL_OVER_PRIMAL: f64 = 3.0;
const EXTRAP_STRONG_FORM_MAX: f64 = 0.15;
const EXTRAP_HISTORY_FNN_MIN: f64 = 0.30;
const BURST_DT: f64 = 0.005;

/// Strain beyond which path-B dissipation violations of the weak-form
/// models are reported instead of failed.
const WEAK_FORM_TRUST_EPS: f64 = 3.0e-2;
const WEAK_FORM_MIN_FRACTION: f64 = 0.99;

fn assert_criterion(id: u8) {
    let results = run_selftest_subset(&[id]);
    assert_eq!(results.len(), 1, "criterion {id} missing from the table");
    let r = &results[0];
    println!("{}", r.line());
    assert!(r.pass, "{}", r.line());
}

#[test]
fn criterion_1_reference_material_oracles() {
    assert_criterion(1);
}

#[test]
fn criterion_2_apriori_nonnegative_dissipation() {
    assert_criterion(2);
}

#[test]
fn criterion_3_zero_state_normalization() {
    assert_criterion(3);
}

#[test]
fn criterion_4_gradient_checks() {
    assert_criterion(4);
}

#[test]
fn criterion_7_dissipation_screening_detects_planted_violation() {
    assert_criterion(7);
}

#[test]
fn criterion_8_scaling_identities() {
    assert_criterion(8);
}

fn out_root() -> PathBuf {
    std::env::var_os("BENCH_OUT_ROOT")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-out")
        })
}

/// Train a preset unless its checkpoint already exists, enforce the wall
/// cap, and hand back the model with its training metrics.
fn trained(preset: &str) -> (TrainedModel, serde_json::Value) {
    let out = out_root();
    let cfg = experiment_preset(preset).expect("known preset");
    let start = Instant::now();
    let model = train_if_missing(&cfg, &out).expect("training succeeds");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < TRAIN_WALL_CAP_S,
        "{preset}: training took {elapsed:.0}s, cap is {TRAIN_WALL_CAP_S:.0}s"
    );
    let metrics_path = run_dir(&out, &cfg.name).join("metrics.json");
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&metrics_path).expect("metrics written"))
            .expect("metrics parse");
    (model, metrics)
}

fn validated(preset: &str, path: ValPath) -> (TrainedModel, PredictionTrace, ValidationMetrics) {
    let (model, _) = trained(preset);
    let (trace, metrics) = validate_model(&model, path).expect("validation succeeds");
    println!(
        "{preset}: path {path} stress MAE {:.4} MPa ({:.2}% of range)",
        metrics.stress_mae_mpa, metrics.stress_mae_pct_of_range
    );
    (model, trace, metrics)
}

fn final_loss_and_iterations(metrics: &serde_json::Value) -> (f64, u64) {
    (
        metrics["final_loss"].as_f64().expect("final_loss"),
        metrics["iterations"].as_u64().expect("iterations"),
    )
}

fn term_value(metrics: &serde_json::Value, name: &str) -> f64 {
    let names = metrics["term_names"].as_array().expect("term_names");
    let idx = names
        .iter()
        .position(|n| n == name)
        .unwrap_or_else(|| panic!("no loss term named {name} in {names:?}"));
    metrics["final_terms"][idx].as_f64().expect("term value")
}

#[test]
#[ignore = "trains three checkpoints; run via --ignored"]
fn criterion_5_training_reproduction() {
    let (_, m) = trained("v1-fnn-sigma");
    let (loss, iters) = final_loss_and_iterations(&m);
    let pass_a = loss <= LOSS_BOUND_FNN_SIGMA_V1 && iters <= ITERATION_BUDGET;
    println!(
        "[criterion 5a] {} history-window net on V1 — loss {loss:.3e} (bound {LOSS_BOUND_FNN_SIGMA_V1:.0e}) in {iters} iterations",
        if pass_a { "PASS" } else { "FAIL" }
    );

    let (_, m) = trained("p2-rnn-sigma");
    let (loss, iters) = final_loss_and_iterations(&m);
    let pass_b = loss <= LOSS_BOUND_RNN_SIGMA_P2 && iters <= ITERATION_BUDGET;
    println!(
        "[criterion 5b] {} recurrent net on P2 — loss {loss:.3e} (bound {LOSS_BOUND_RNN_SIGMA_P2:.0e}) in {iters} iterations",
        if pass_b { "PASS" } else { "FAIL" }
    );

    let (_, m) = trained("v2-fnn-psiphi");
    let sig = term_value(&m, "sig");
    let iters = m["iterations"].as_u64().expect("iterations");
    let pass_c = sig <= LOSS_BOUND_PSIPHI_V2_SIG && iters <= ITERATION_BUDGET;
    println!(
        "[criterion 5c] {} potential pair on V2 — stress term {sig:.3e} (bound {LOSS_BOUND_PSIPHI_V2_SIG:.0e}) in {iters} iterations",
        if pass_c { "PASS" } else { "FAIL" }
    );

    assert!(pass_a && pass_b && pass_c, "training reproduction failed");
}

/// Per-row relative stress errors of a model on the extrapolation path:
/// the largest anywhere and the largest inside the high-rate burst.
fn extrapolation_errors(model: &TrainedModel, trace: &PredictionTrace, range: f64) -> (f64, f64) {
    let path = build_extrapolation_path();
    let states = Material::from_id(model.material)
        .simulate(&path)
        .expect("reference simulates");
    assert_eq!(trace.rows.len(), states.len(), "trace covers the path");
    let mut max_all = 0.0_f64;
    let mut max_burst = 0.0_f64;
    for ((row, step), state) in trace.rows[1..]
        .iter()
        .zip(path.steps())
        .zip(states[1..].iter())
    {
        let rel = (row.sig_hat - state.sig).abs() / range;
        max_all = max_all.max(rel);
        if step.dt == BURST_DT {
            max_burst = max_burst.max(rel);
        }
    }
    (max_all, max_burst)
}

#[test]
#[ignore = "trains eight checkpoints; run via --ignored"]
fn criterion_6_qualitative_findings() {
    let (_, _, one_step) = validated("v2-fnn-sigma", ValPath::A);
    let (_, _, two_step) = validated("v2-fnn-sigma-npt2", ValPath::A);
    let pass_a = two_step.stress_mae_mpa * NPT2_GAIN <= one_step.stress_mae_mpa;
    println!(
        "[criterion 6a] {} second history step on V2 — MAE {:.4} vs {:.4} MPa (needs {NPT2_GAIN}x)",
        if pass_a { "PASS" } else { "FAIL" },
        two_step.stress_mae_mpa,
        one_step.stress_mae_mpa
    );

    let (_, _, p1) = validated("p1-fnn-sigma", ValPath::A);
    let (_, _, p2) = validated("p2-fnn-sigma", ValPath::A);
    let pass_b = p2.stress_mae_mpa > P2_OVER_P1 * p1.stress_mae_mpa;
    println!(
        "[criterion 6b] {} isotropic hardening breaks the history window — MAE {:.4} vs {:.4} MPa (needs {P2_OVER_P1}x)",
        if pass_b { "PASS" } else { "FAIL" },
        p2.stress_mae_mpa,
        p1.stress_mae_mpa
    );

    let (_, _, primal) = validated("p1-fnn-psiphi", ValPath::A);
    let (_, _, dual) = validated("p1-fnn-psiphistar", ValPath::A);
    let pass_c = dual.stress_mae_mpa > DUAL_OVER_PRIMAL * primal.stress_mae_mpa;
    println!(
        "[criterion 6c] {} dual potential trails the primal on P1 — MAE {:.4} vs {:.4} MPa (needs {DUAL_OVER_PRIMAL}x)",
        if pass_c { "PASS" } else { "FAIL" },
        dual.stress_mae_mpa,
        primal.stress_mae_mpa
    );

    let (model, trace, metrics) = validated("v1-fnn-psiphi", ValPath::B);
    let (strong_all, strong_burst) =
        extrapolation_errors(&model, &trace, metrics.stress_range_mpa);
    let (model, trace, metrics) = validated("v1-fnn-sigma", ValPath::B);
    let (_, fnn_burst) = extrapolation_errors(&model, &trace, metrics.stress_range_mpa);
    let pass_d = strong_all < EXTRAP_STRONG_FORM_MAX && fnn_burst > EXTRAP_HISTORY_FNN_MIN;
    println!(
        "[criterion 6d] {} extrapolation — potential pair max {:.1}% (burst {:.1}%), history window burst {:.1}% of range",
        if pass_d { "PASS" } else { "FAIL" },
        100.0 * strong_all,
        100.0 * strong_burst,
        100.0 * fnn_burst
    );

    assert!(
        pass_a && pass_b && pass_c && pass_d,
        "qualitative findings not reproduced"
    );
}

/// Count path-B dissipation flags inside and beyond the trusted strain band
/// and check every flag points at a genuinely negative trace value.
fn report_extrapolation_flags(
    name: &str,
    model: &TrainedModel,
    trace: &PredictionTrace,
    metrics: &ValidationMetrics,
) {
    let tol = DISS_TOLERANCE_SCALED * model.scaling.phi.scale;
    let mut inside = 0usize;
    let mut beyond = 0usize;
    for &i in &metrics.diss_violation_steps {
        let row = &trace.rows[i];
        let diss = row.diss_hat.expect("flagged row carries dissipation");
        assert!(diss < -tol, "{name}: step {i} flagged but rate {diss:.3e} is not a violation");
        if row.eps.abs() > WEAK_FORM_TRUST_EPS {
            beyond += 1;
        } else {
            inside += 1;
        }
    }
    println!(
        "[criterion 7] REPORT {name} extrapolation — {} flags ({} within {:.0}% strain, {} beyond), min rate {:.3e}",
        metrics.diss_violation_steps.len(),
        inside,
        100.0 * WEAK_FORM_TRUST_EPS,
        beyond,
        metrics.diss_min.unwrap_or(f64::NAN)
    );
}

#[test]
#[ignore = "trains two checkpoints; run via --ignored"]
fn criterion_7_weak_form_penalty_efficacy() {
    for preset in ["v1-fnn-xipsi", "v1-rnn-xipsi"] {
        let (model, _, a) = validated(preset, ValPath::A);
        let fraction = a
            .diss_nonneg_fraction
            .expect("internal-variable model reports dissipation");
        let pass = fraction >= WEAK_FORM_MIN_FRACTION;
        println!(
            "[criterion 7] {} {preset} — {:.2}% of interpolation steps nonnegative (needs {:.0}%)",
            if pass { "PASS" } else { "FAIL" },
            100.0 * fraction,
            100.0 * WEAK_FORM_MIN_FRACTION
        );
        assert!(pass, "{preset}: weak-form penalty not effective on path A");

        let (trace, b) = validate_model(&model, ValPath::B).expect("validation succeeds");
        report_extrapolation_flags(preset, &model, &trace, &b);
    }
}
