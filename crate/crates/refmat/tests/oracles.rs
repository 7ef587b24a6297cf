//! Frozen-value and convergence checks against independently coded oracles.
//!
//! The explicit fine-step integrator below evaluates the viscous flow rule
//! directly (no Newton solve, no shared code with the implicit update), so
//! agreement under time-step refinement is evidence for both.

use approx::assert_relative_eq;
use refmat::{Material, MaterialId, MaxwellBranch, StrainPath, ViscoParams};

/// Explicit Euler for the generalized-Maxwell model on a piecewise-linear
/// strain history, `substeps` fine steps per path step.
fn explicit_visco_trace(params: &ViscoParams, path: &StrainPath, substeps: usize) -> Vec<f64> {
    let eta = |b: &MaxwellBranch, s: f64| -> f64 {
        if b.rate_coeff == 0.0 {
            b.viscosity
        } else {
            b.viscosity * (b.rate_coeff * s.abs().powf(b.rate_exp)).exp()
        }
    };
    let mut eps_vi = vec![0.0; params.branches.len()];
    let mut eps_prev = 0.0;
    let mut sig_trace = Vec::with_capacity(path.len());
    for step in path.steps() {
        let h = step.dt / substeps as f64;
        for k in 0..substeps {
            // strain interpolated linearly inside the coarse step
            let eps_k = eps_prev + (step.eps - eps_prev) * (k as f64 / substeps as f64);
            for (b, evi) in params.branches.iter().zip(eps_vi.iter_mut()) {
                let s = b.stiffness * (eps_k - *evi);
                *evi += h * s / eta(b, s);
            }
        }
        let sig = params.stiffness * step.eps
            + params
                .branches
                .iter()
                .zip(&eps_vi)
                .map(|(b, evi)| b.stiffness * (step.eps - evi))
                .sum::<f64>();
        sig_trace.push(sig);
        eps_prev = step.eps;
    }
    sig_trace
}

fn zigzag_path() -> StrainPath {
    // A few load reversals, increments inside [0.02, 0.1] s.
    let mut increments = Vec::new();
    let knots = [0.0, 0.015, -0.01, 0.02, 0.0];
    for w in knots.windows(2) {
        for k in 1..=10 {
            increments.push((0.04, w[0] + (w[1] - w[0]) * k as f64 / 10.0));
        }
    }
    StrainPath::from_increments(&increments).unwrap()
}

fn max_stress_error(m: &Material, path: &StrainPath, reference: &[f64]) -> f64 {
    let trace = m.simulate(path).unwrap();
    trace[1..]
        .iter()
        .zip(reference)
        .map(|(s, r)| (s.sig - r).abs())
        .fold(0.0, f64::max)
}

#[test]
fn v2_implicit_euler_converges_to_explicit_oracle_at_first_order() {
    let path = zigzag_path();
    let m = Material::v2();
    let reference = explicit_visco_trace(&ViscoParams::v2(), &path, 4000);

    let e1 = max_stress_error(&m, &path, &reference);
    let path2 = path.refined();
    let ref2 = explicit_visco_trace(&ViscoParams::v2(), &path2, 2000);
    let e2 = max_stress_error(&m, &path2, &ref2);
    let order = (e1 / e2).log2();
    assert!(
        order >= 0.9,
        "observed order {order:.3} (errors {e1:.3e} -> {e2:.3e})"
    );
}

#[test]
fn v1_implicit_euler_converges_to_explicit_oracle_at_first_order() {
    let path = zigzag_path();
    let m = Material::v1();
    let reference = explicit_visco_trace(&ViscoParams::v1(), &path, 4000);

    let e1 = max_stress_error(&m, &path, &reference);
    let path2 = path.refined();
    let ref2 = explicit_visco_trace(&ViscoParams::v1(), &path2, 2000);
    let e2 = max_stress_error(&m, &path2, &ref2);
    let order = (e1 / e2).log2();
    assert!(
        order >= 0.9,
        "observed order {order:.3} (errors {e1:.3e} -> {e2:.3e})"
    );
}

#[test]
fn v2_relaxation_approaches_equilibrium_stress() {
    // Hold eps = 1 %: overstresses decay with time constants 1 s and 0.25 s,
    // the stress tends to E * eps = 10 MPa.
    let m = Material::v2();
    let increments: Vec<(f64, f64)> = (0..400).map(|_| (0.05, 0.01)).collect();
    let path = StrainPath::from_increments(&increments).unwrap();
    let trace = m.simulate(&path).unwrap();
    let last = trace.last().unwrap();
    assert!((last.sig - 10.0).abs() < 1e-3, "sig = {}", last.sig);
    // Monotone decay towards equilibrium after the first step.
    for w in trace[1..].windows(2) {
        assert!(w[1].sig <= w[0].sig + 1e-12);
    }
}

#[test]
fn p1_monotone_loading_matches_hand_values() {
    let m = Material::p1();
    let s = m.step(&m.initial_state(), 0.01, 0.05).unwrap();
    assert_relative_eq!(s.sig, 400.0 / 3.0, max_relative = 1e-12);
    assert_relative_eq!(s.xi[0], 1.0 / 300.0, max_relative = 1e-12);
    // Below first yield everything is elastic.
    let e = m.step(&m.initial_state(), 0.004, 0.05).unwrap();
    assert_relative_eq!(e.sig, 80.0, max_relative = 1e-14);
    assert_eq!(e.xi, vec![0.0; 3]);
    assert_eq!(e.diss, 0.0);
}

#[test]
fn return_mapping_is_step_size_insensitive_on_monotone_ramps() {
    // Rate independence: the state at eps = 2 % must not depend on how many
    // increments the monotone ramp used.
    for id in [MaterialId::P1, MaterialId::P2] {
        let m = Material::from_id(id);
        let coarse = m
            .simulate(&StrainPath::ramp(0.02, 0.05, 5).unwrap())
            .unwrap();
        let fine = m
            .simulate(&StrainPath::ramp(0.02, 0.0125, 20).unwrap())
            .unwrap();
        let a = coarse.last().unwrap();
        let b = fine.last().unwrap();
        assert_relative_eq!(a.sig, b.sig, max_relative = 1e-12);
        assert_relative_eq!(a.xi[0], b.xi[0], max_relative = 1e-12);
    }
}

#[test]
fn plastic_dissipation_equals_yield_stress_times_flow() {
    // For the exact return mapping, tau . dxi = sig_y0 * dlambda.
    let m = Material::p2();
    let s = m.step(&m.initial_state(), 0.01, 0.05).unwrap();
    let dlambda = s.xi[2];
    assert!(dlambda > 0.0);
    assert_relative_eq!(s.diss, 100.0 * dlambda / 0.05, max_relative = 1e-12);
}
