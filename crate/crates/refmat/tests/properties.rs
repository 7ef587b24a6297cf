//! Property tests: thermodynamic sanity on randomized strain paths.

use proptest::prelude::*;
use refmat::{Material, MaterialId, StrainPath};

fn arb_path(max_steps: usize) -> impl Strategy<Value = StrainPath> {
    prop::collection::vec((0.02f64..0.1, -0.03f64..0.03), 1..max_steps)
        .prop_map(|inc| StrainPath::from_increments(&inc).expect("positive increments"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Dissipation stays non-negative for every material on every step.
    #[test]
    fn dissipation_nonnegative(path in arb_path(60)) {
        for id in MaterialId::ALL {
            let m = Material::from_id(id);
            let trace = m.simulate(&path).unwrap();
            for s in &trace {
                prop_assert!(s.diss >= -1e-12, "{id}: diss = {:e}", s.diss);
            }
        }
    }

    /// Free energy is non-negative and zero only at the unloaded state.
    #[test]
    fn free_energy_nonnegative(path in arb_path(40)) {
        for id in MaterialId::ALL {
            let m = Material::from_id(id);
            for s in m.simulate(&path).unwrap() {
                prop_assert!(s.psi >= 0.0);
            }
        }
    }

    /// Stress equals the elastic relation at the updated internal state.
    #[test]
    fn stress_consistent_with_internal_state(path in arb_path(40)) {
        let m = Material::v2();
        let trace = m.simulate(&path).unwrap();
        for s in &trace[1..] {
            let expected = 1_000.0 * s.eps
                + 10_000.0 * (s.eps - s.xi[0])
                + 20_000.0 * (s.eps - s.xi[1]);
            prop_assert!((s.sig - expected).abs() <= 1e-9 * s.sig.abs().max(1.0));
        }
        let p = Material::p2();
        for s in p.simulate(&path).unwrap()[1..].iter() {
            let expected = 20_000.0 * (s.eps - s.xi[0]);
            prop_assert!((s.sig - expected).abs() <= 1e-9 * s.sig.abs().max(1.0));
        }
    }

    /// The yield function never ends a step positive.
    #[test]
    fn yield_condition_never_violated(path in arb_path(60)) {
        for id in [MaterialId::P1, MaterialId::P2] {
            let Material::Elastoplastic(p) = Material::from_id(id) else { unreachable!() };
            let m = Material::from_id(id);
            for s in m.simulate(&path).unwrap()[1..].iter() {
                let f = p.yield_fn(s.sig, s.xi[1], s.xi[2]);
                prop_assert!(f <= 1e-9, "{id}: f = {f:e}");
            }
        }
    }
}
