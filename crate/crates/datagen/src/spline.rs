//! Natural cubic spline strain paths for time-input training.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refmat::StrainPath;

use crate::error::DatagenError;

/// Natural cubic spline through `(t, value)` knots, evaluated with clamped
/// ends: queries before the first knot return the first value, queries after
/// the last knot hold the last value.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    t: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(knots: &[(f64, f64)]) -> Result<Self, DatagenError> {
        if knots.len() < 3 {
            return Err(DatagenError::TooFewKnots(knots.len()));
        }
        for (i, pair) in knots.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(DatagenError::UnorderedKnots { index: i + 1 });
            }
        }
        let n = knots.len() - 1;
        let t: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let y: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let h: Vec<f64> = (0..n).map(|i| t[i + 1] - t[i]).collect();

        // Second derivatives m[i] from the natural-end tridiagonal system,
        // solved by the Thomas algorithm.
        let mut m = vec![0.0; n + 1];
        if n > 1 {
            let rows = n - 1;
            let mut diag = vec![0.0; rows];
            let mut rhs = vec![0.0; rows];
            for i in 1..n {
                diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
            }
            for i in 1..rows {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 1] = rhs[rows - 1] / diag[rows - 1];
            for i in (1..n - 1).rev() {
                m[i] = (rhs[i - 1] - h[i] * m[i + 1]) / diag[i - 1];
            }
        }

        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            a[i] = y[i];
            b[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
            c[i] = m[i] / 2.0;
            d[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
        }
        Ok(CubicSpline { t, a, b, c, d })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.a.len();
        if x <= self.t[0] {
            return self.a[0];
        }
        if x >= self.t[n] {
            // Hold the final knot value.
            let s = x.min(self.t[n]) - self.t[n - 1];
            return self.a[n - 1]
                + self.b[n - 1] * s
                + self.c[n - 1] * s * s
                + self.d[n - 1] * s * s * s;
        }
        let i = match self.t.partition_point(|&tk| tk <= x) {
            0 => 0,
            p => (p - 1).min(n - 1),
        };
        let s = x - self.t[i];
        self.a[i] + self.b[i] * s + self.c[i] * s * s + self.d[i] * s * s * s
    }

    pub fn domain_end(&self) -> f64 {
        *self.t.last().expect("spline has knots")
    }
}

/// Sample a spline through the knots with random time increments. Strains
/// beyond the last knot hold its value, so paths longer than the knot span
/// end in a constant tail.
pub fn gen_spline_path(
    knots: &[(f64, f64)],
    dt_min: f64,
    dt_max: f64,
    n_steps: usize,
    seed: u64,
) -> Result<StrainPath, DatagenError> {
    if !(0.0 < dt_min && dt_min < dt_max) {
        return Err(DatagenError::Config(format!(
            "invalid dt range [{dt_min}, {dt_max})"
        )));
    }
    let spline = CubicSpline::natural(knots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut increments = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let dt = rng.random_range(dt_min..dt_max);
        t += dt;
        increments.push((dt, spline.eval(t)));
    }
    Ok(StrainPath::from_increments(&increments)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_knots_exactly() {
        let knots = [(0.0, 0.0), (1.0, 2.0), (2.5, -1.0), (4.0, 0.5)];
        let s = CubicSpline::natural(&knots).unwrap();
        for &(t, y) in &knots {
            assert_relative_eq!(s.eval(t), y, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn collinear_knots_reproduce_the_line() {
        let knots: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let s = CubicSpline::natural(&knots).unwrap();
        for k in 0..=90 {
            let t = k as f64 * 0.1;
            assert_relative_eq!(s.eval(t), 3.0 * t - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn holds_last_value_beyond_domain() {
        let knots = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)];
        let s = CubicSpline::natural(&knots).unwrap();
        assert_eq!(s.eval(2.0), s.eval(7.0));
        assert_eq!(s.eval(-1.0), 0.0);
    }

    #[test]
    fn spline_path_is_deterministic_and_in_range() {
        let knots = [(0.0, 0.0), (4.0, 0.01), (8.0, -0.01), (12.0, 0.0)];
        let p1 = gen_spline_path(&knots, 0.01, 0.02, 900, 42).unwrap();
        let p2 = gen_spline_path(&knots, 0.01, 0.02, 900, 42).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.len(), 900);
        for s in p1.steps() {
            assert!(s.dt >= 0.01 && s.dt < 0.02);
        }
        // 900 steps of at least 0.01 s pass the 12 s knot span; the tail holds.
        let last = p1.steps().last().unwrap();
        assert!(last.t > 12.0);
        assert_eq!(last.eps, 0.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(matches!(
            CubicSpline::natural(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(DatagenError::TooFewKnots(2))
        ));
        assert!(matches!(
            CubicSpline::natural(&[(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]),
            Err(DatagenError::UnorderedKnots { index: 2 })
        ));
    }
}
