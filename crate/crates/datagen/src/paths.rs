//! Fixed validation strain paths and the spline-knot fixture.
//!
//! Two deterministic paths probe trained models. The interpolation path stays
//! inside the training envelope: mild rates, strains within two percent, a
//! uniform increment. The extrapolation path deliberately leaves it with a
//! hysteresis excursion to three percent strain, a sixteen-step burst at
//! rates far above anything in the training walks, a relaxation hold, and a
//! final ramp to six percent under increments up to twice the training
//! maximum.

use std::path::Path;

use refmat::StrainPath;

use crate::error::DatagenError;

const INTERPOLATION_CSV: &str = include_str!("../fixtures/paths/interpolation.csv");
const EXTRAPOLATION_CSV: &str = include_str!("../fixtures/paths/extrapolation.csv");
const SPLINE_KNOTS_CSV: &str = include_str!("../fixtures/paths/spline_knots.csv");

/// Corner points of the interpolation path: two wide lobes and a recovery,
/// all within the training strain band.
const INTERPOLATION_KNOTS: [(f64, f64); 6] = [
    (0.0, 0.0),
    (2.0, 1.8e-2),
    (4.5, -1.5e-2),
    (7.0, 1.2e-2),
    (8.5, -0.8e-2),
    (10.0, 0.0),
];

/// Knots of the training spline for the time-input architecture: one large
/// lobe in each direction plus a small terminal wiggle, twelve seconds long.
const SPLINE_KNOTS: [(f64, f64); 10] = [
    (0.0, 0.0),
    (1.5, 1.2e-2),
    (2.8, 1.9e-2),
    (4.0, 0.8e-2),
    (5.2, -1.0e-2),
    (6.4, -1.8e-2),
    (7.6, -0.6e-2),
    (9.0, 0.5e-2),
    (10.5, -0.3e-2),
    (12.0, 0.0),
];

pub fn spline_knots() -> Vec<(f64, f64)> {
    SPLINE_KNOTS.to_vec()
}

fn piecewise_linear(knots: &[(f64, f64)], t: f64) -> f64 {
    if t <= knots[0].0 {
        return knots[0].1;
    }
    for pair in knots.windows(2) {
        let (t0, y0) = pair[0];
        let (t1, y1) = pair[1];
        if t <= t1 {
            return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
        }
    }
    knots.last().expect("knots nonempty").1
}

/// Build the interpolation path from its corner points: 200 uniform steps of
/// 0.05 s over ten seconds.
pub fn build_interpolation_path() -> StrainPath {
    let dt = 0.05;
    let increments: Vec<(f64, f64)> = (1..=200)
        .map(|k| {
            let t = k as f64 * dt;
            (dt, piecewise_linear(&INTERPOLATION_KNOTS, t))
        })
        .collect();
    StrainPath::from_increments(&increments).expect("fixed schedule is valid")
}

/// Build the extrapolation path from its schedule. Segments, in order: a ramp
/// to the training strain maximum, a hysteresis lobe to three percent and
/// back to zero, a rest hold, a sixteen-step high-rate burst to 2.5 percent
/// and back, another hold, and a ramp to six percent whose time increments
/// start above the training maximum and relax back into it.
pub fn build_extrapolation_path() -> StrainPath {
    let mut inc: Vec<(f64, f64)> = Vec::with_capacity(188);

    // Ramp 0 -> 2 % over [0, 2] s.
    for k in 1..=40 {
        let t = k as f64 * 0.05;
        inc.push((0.05, 0.01 * t));
    }
    // Hysteresis: up to 3 % over (2, 3], back to zero over (3, 4].
    for k in 1..=20 {
        let t = 2.0 + k as f64 * 0.05;
        inc.push((0.05, 0.02 + 0.01 * (t - 2.0)));
    }
    for k in 1..=20 {
        let t = 3.0 + k as f64 * 0.05;
        inc.push((0.05, 0.03 * (4.0 - t)));
    }
    // Hold at zero over (4, 5].
    for _ in 0..20 {
        inc.push((0.05, 0.0));
    }
    // High-rate burst: eight steps up to 2.5 %, eight back down, dt = 5 ms.
    for k in 1..=8 {
        inc.push((0.005, 2.5e-2 * k as f64 / 8.0));
    }
    for k in 1..=8 {
        inc.push((0.005, 2.5e-2 * (8 - k) as f64 / 8.0));
    }
    // Hold at zero until t = 6: one short step onto the 0.05 grid, then 18
    // regular ones.
    inc.push((0.02, 0.0));
    for _ in 0..18 {
        inc.push((0.05, 0.0));
    }
    // Ramp toward 6 % at t = 10 with three increment sizes.
    let ramp = |t: f64| 0.06 * (t - 6.0) / 4.0;
    for k in 1..=8 {
        let t = 6.0 + k as f64 * 0.125;
        inc.push((0.125, ramp(t)));
    }
    for k in 1..=5 {
        let t = 7.0 + k as f64 * 0.2;
        inc.push((0.2, ramp(t)));
    }
    for k in 1..=40 {
        let t = 8.0 + k as f64 * 0.05;
        inc.push((0.05, ramp(t)));
    }
    StrainPath::from_increments(&inc).expect("fixed schedule is valid")
}

/// Interpolation path, loaded from the bundled fixture.
pub fn interpolation_path() -> StrainPath {
    path_from_csv(INTERPOLATION_CSV).expect("bundled fixture parses")
}

/// Extrapolation path, loaded from the bundled fixture.
pub fn extrapolation_path() -> StrainPath {
    path_from_csv(EXTRAPOLATION_CSV).expect("bundled fixture parses")
}

/// Spline knots, loaded from the bundled fixture.
pub fn spline_knots_fixture() -> Vec<(f64, f64)> {
    let mut r = csv::Reader::from_reader(SPLINE_KNOTS_CSV.as_bytes());
    r.records()
        .map(|rec| {
            let rec = rec.expect("bundled fixture parses");
            (
                rec[0].parse().expect("numeric knot time"),
                rec[1].parse().expect("numeric knot strain"),
            )
        })
        .collect()
}

/// Parse a `t,dt,eps` path table.
pub fn path_from_csv(text: &str) -> Result<StrainPath, DatagenError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<&str> = r.headers()?.iter().collect();
    if header != ["t", "dt", "eps"] {
        return Err(DatagenError::Parse(format!(
            "unexpected path header: {header:?}"
        )));
    }
    let mut increments = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64, DatagenError> {
            rec.get(i)
                .ok_or_else(|| DatagenError::Parse("short path record".into()))?
                .parse()
                .map_err(|e: std::num::ParseFloatError| DatagenError::Parse(e.to_string()))
        };
        let _t = get(0)?;
        increments.push((get(1)?, get(2)?));
    }
    Ok(StrainPath::from_increments(&increments)?)
}

/// Render a path as a `t,dt,eps` table with shortest round-trip decimals.
pub fn path_to_csv(path: &StrainPath) -> String {
    let mut out = String::from("t,dt,eps\n");
    for s in path.steps() {
        out.push_str(&format!("{},{},{}\n", s.t, s.dt, s.eps));
    }
    out
}

/// Rewrite the bundled fixtures from the builders. Used by the ignored
/// regeneration test; fails if the fixture directory is missing.
pub fn write_fixtures(dir: &Path) -> Result<(), DatagenError> {
    std::fs::write(
        dir.join("interpolation.csv"),
        path_to_csv(&build_interpolation_path()),
    )
    .map_err(DatagenError::Io)?;
    std::fs::write(
        dir.join("extrapolation.csv"),
        path_to_csv(&build_extrapolation_path()),
    )
    .map_err(DatagenError::Io)?;
    let mut knots = String::from("t,eps\n");
    for (t, e) in SPLINE_KNOTS {
        knots.push_str(&format!("{t},{e}\n"));
    }
    std::fs::write(dir.join("spline_knots.csv"), knots).map_err(DatagenError::Io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[ignore = "rewrites the bundled fixture files in place"]
    fn regenerate_fixtures() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/paths");
        write_fixtures(&dir).unwrap();
    }

    #[test]
    fn fixtures_match_builders() {
        assert_eq!(interpolation_path(), build_interpolation_path());
        assert_eq!(extrapolation_path(), build_extrapolation_path());
        assert_eq!(spline_knots_fixture(), spline_knots());
    }

    #[test]
    fn interpolation_path_stays_in_training_envelope() {
        let path = interpolation_path();
        assert_eq!(path.len(), 200);
        let mut hit_both_signs = (false, false);
        for s in path.steps() {
            assert!(s.eps.abs() <= 2.0e-2 + 1e-15);
            assert_eq!(s.dt, 0.05);
            hit_both_signs.0 |= s.eps > 1.0e-2;
            hit_both_signs.1 |= s.eps < -1.0e-2;
        }
        assert!(hit_both_signs.0 && hit_both_signs.1);
        assert!((path.duration() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_path_follows_its_schedule() {
        let path = extrapolation_path();
        let steps = path.steps();
        assert_eq!(path.len(), 188);
        let last = steps.last().unwrap();
        assert!((last.t - 10.0).abs() < 1e-9);
        assert!((last.eps - 0.06).abs() < 1e-15);

        // Hysteresis peak of 3 % inside (2, 4].
        let peak = steps
            .iter()
            .filter(|s| s.t > 2.0 && s.t <= 4.0)
            .map(|s| s.eps)
            .fold(f64::MIN, f64::max);
        assert!((peak - 0.03).abs() < 1e-15);

        // Sixteen burst steps at 5 ms reaching 2.5 % and returning to zero.
        let burst: Vec<_> = steps.iter().filter(|s| s.dt == 0.005).collect();
        assert_eq!(burst.len(), 16);
        let burst_peak = burst.iter().map(|s| s.eps).fold(f64::MIN, f64::max);
        assert!((burst_peak - 0.025).abs() < 1e-15);
        assert_eq!(burst.last().unwrap().eps, 0.0);
        let rate = (burst[0].eps / burst[0].dt).abs();
        assert!((rate - 0.625).abs() < 1e-12);

        // Relaxation hold at zero strain through (5.08, 6].
        for s in steps.iter().filter(|s| s.t > 5.08 && s.t <= 6.0) {
            assert_eq!(s.eps, 0.0);
        }

        // Large increments right after the hold, relaxing back to 0.05.
        let coarse: Vec<_> = steps.iter().filter(|s| s.dt > 0.1).collect();
        assert_eq!(coarse.len(), 13);
        assert!(coarse.iter().all(|s| s.t > 6.0 && s.t <= 8.0));

        // Times are consistent with increments throughout.
        let mut t = 0.0;
        for s in steps {
            t += s.dt;
            assert!((s.t - t).abs() < 1e-9);
        }
    }

    #[test]
    fn spline_knots_span_the_training_band() {
        let knots = spline_knots();
        assert_eq!(knots.len(), 10);
        assert_eq!(knots[0], (0.0, 0.0));
        assert_eq!(knots[9], (12.0, 0.0));
        let max = knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max);
        assert!(max <= 2.0e-2 && max >= 1.5e-2);
    }
}
