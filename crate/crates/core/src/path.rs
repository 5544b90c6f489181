//! Discretized driving Wiener paths and the functionals derived from them:
//! exponential integrals of geometric Brownian motion, Ito sums and Levy
//! stochastic areas.

use crate::config::{DriftParam, SimConfig};
use crate::error::{Error, Result};
use crate::rng::IncrementStreams;

/// A bundle of independent standard Brownian motions sampled on a shared
/// uniform grid. Component 0 is conventionally the one driving the height
/// coordinate.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub t_grid: Vec<f64>,
    /// `components[c][i]` is the value of BM `c` at `t_grid[i]`; every
    /// component starts at 0.
    pub components: Vec<Vec<f64>>,
}

impl PathSample {
    /// The primary component, named `b` after the height-driving motion.
    pub fn b(&self) -> &[f64] {
        &self.components[0]
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }
}

/// Exponential functionals of one drifted path, all evaluated at the
/// horizon T by the trapezoid rule:
/// `a_small = int_0^T exp(B^(-mu)_s) ds`, `a_big` with `exp(2 B)`,
/// `a_tilde` with `exp(4 B)`, and `b_end = B(T) - mu T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFunctionals {
    pub a_small: f64,
    pub a_big: f64,
    pub a_tilde: f64,
    pub b_end: f64,
}

/// Draws `n_components` independent standard BMs on the grid
/// `{0, dt, 2dt, ..., T}`. Fully deterministic given `(seed, stream_id)`.
pub fn sample_bm_path(config: &SimConfig, n_components: u32, stream_id: u64) -> Result<PathSample> {
    config.validate()?;
    if n_components == 0 {
        return Err(Error::Domain("n_components must be >= 1".into()));
    }
    let n_steps = config.n_steps();
    let dt = config.dt_eff();
    let mut streams = IncrementStreams::new(config.seed, stream_id, n_components, dt);

    let t_grid: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
    let components = (0..n_components as usize)
        .map(|c| {
            let mut path = Vec::with_capacity(n_steps + 1);
            let mut v = 0.0;
            path.push(v);
            for _ in 0..n_steps {
                v += streams.next(c);
                path.push(v);
            }
            path
        })
        .collect();
    Ok(PathSample { t_grid, components })
}

/// Trapezoid-rule values of the three exponential functionals along one
/// path, together with the drifted endpoint.
pub fn exp_functionals(path: &PathSample, mu: DriftParam) -> Result<ExpFunctionals> {
    if path.is_empty() {
        return Err(Error::Mismatch("path is empty".into()));
    }
    let b = path.b();
    let t = &path.t_grid;
    let mu = mu.mu();

    let mut acc = [0.0f64; 3];
    let mut prev = [1.0f64; 3]; // exp(k * 0) at t=0
    for i in 1..t.len() {
        let drifted = b[i] - mu * t[i];
        let e1 = drifted.exp();
        let e2 = (2.0 * drifted).exp();
        let e4 = (4.0 * drifted).exp();
        let dt = t[i] - t[i - 1];
        acc[0] += 0.5 * (prev[0] + e1) * dt;
        acc[1] += 0.5 * (prev[1] + e2) * dt;
        acc[2] += 0.5 * (prev[2] + e4) * dt;
        prev = [e1, e2, e4];
    }
    let last = t.len() - 1;
    Ok(ExpFunctionals {
        a_small: acc[0],
        a_big: acc[1],
        a_tilde: acc[2],
        b_end: b[last] - mu * t[last],
    })
}

/// Ito-discretized Levy area `S(T) = 1/2 int_0^T (Y dX - X dY)` of two
/// components on a shared grid, with left-endpoint increments.
pub fn levy_area(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Mismatch(format!(
            "component lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut s = 0.0;
    for i in 1..x.len() {
        s += y[i - 1] * (x[i] - x[i - 1]) - x[i - 1] * (y[i] - y[i - 1]);
    }
    Ok(0.5 * s)
}

/// Conditional characteristic-function factor of the summed Levy areas of
/// `dim_pairs` independent planar BMs, given that the squared norm of the
/// full 2*dim_pairs-dimensional endpoint is `r_sq`:
///
/// `(bt/sinh(bt))^dim_pairs * exp((1 - bt coth(bt)) r_sq / (2t))`.
///
/// The factor multiplies `exp(i * 2b * sum_k S_k(t))` under the condition,
/// is even in `b`, and equals 1 at `b = 0`.
pub fn levy_area_charfn(b: f64, t: f64, r_sq: f64, dim_pairs: u32) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if r_sq < 0.0 {
        return Err(Error::Domain("r_sq must be nonnegative".into()));
    }
    let x = (b * t).abs();
    // sinh(x)/x - 1 and x coth(x) - 1 are O(x^2); below 1e-6 the Taylor
    // heads are exact to f64 precision and avoid 0/0.
    let (log_ratio, coth_defect) = if x < 1e-6 {
        (-(x * x) / 6.0, x * x / 3.0)
    } else {
        ((x / x.sinh()).ln(), x / x.tanh() - 1.0)
    };
    Ok((dim_pairs as f64 * log_ratio - coth_defect * r_sq / (2.0 * t)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_path(n_steps: usize, dt: f64) -> PathSample {
        PathSample {
            t_grid: (0..=n_steps).map(|i| i as f64 * dt).collect(),
            components: vec![vec![0.0; n_steps + 1]],
        }
    }

    #[test]
    fn bm_path_grid_and_start() {
        let cfg = SimConfig::new(3, 1.0, 1.0, 1).unwrap();
        let p = sample_bm_path(&cfg, 2, 0).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.components[0][0], 0.0);
        assert_eq!(p.components[1][0], 0.0);
    }

    #[test]
    fn bm_path_is_deterministic() {
        let cfg = SimConfig::new(99, 0.01, 2.0, 1).unwrap();
        let p = sample_bm_path(&cfg, 3, 11).unwrap();
        let q = sample_bm_path(&cfg, 3, 11).unwrap();
        assert_eq!(p.components, q.components);
    }

    #[test]
    fn bm_endpoint_moments() {
        // B(1) over 1e4 paths: mean within 4/sqrt(1e4), variance within 10%.
        let cfg = SimConfig::new(1, 0.05, 1.0, 1).unwrap();
        let ends: Vec<f64> = (0..10_000)
            .map(|s| *sample_bm_path(&cfg, 1, s).unwrap().b().last().unwrap())
            .collect();
        let mean = ends.iter().sum::<f64>() / ends.len() as f64;
        let var = ends.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (ends.len() - 1) as f64;
        assert!(mean.abs() < 4.0 / 100.0, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn functionals_of_flat_path() {
        // B == 0, mu = 1, T = 1: the integrals are exact exponentials.
        let p = zero_path(10_000, 1e-4);
        let f = exp_functionals(&p, DriftParam::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(f.a_big, 0.43233235838169365, epsilon = 1e-8);
        assert_abs_diff_eq!(f.a_small, 0.63212055882855768, epsilon = 1e-8);
        assert_abs_diff_eq!(f.a_tilde, 0.24542109027781645, epsilon = 1e-8);
        assert_abs_diff_eq!(f.b_end, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn functionals_vanish_at_time_zero() {
        let p = PathSample { t_grid: vec![0.0], components: vec![vec![0.0]] };
        let f = exp_functionals(&p, DriftParam::new(1.0).unwrap()).unwrap();
        assert_eq!((f.a_small, f.a_big, f.a_tilde), (0.0, 0.0, 0.0));
    }

    #[test]
    fn levy_area_zero_cases() {
        let z = vec![0.0; 100];
        assert_eq!(levy_area(&z, &z).unwrap(), 0.0);
        // X(s) = Y(s) = s: the integrand cancels term by term.
        let s: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert_eq!(levy_area(&s, &s).unwrap(), 0.0);
        assert!(levy_area(&s, &z[..50]).is_err());
    }

    #[test]
    fn levy_area_of_circle() {
        // X = cos s - 1, Y = sin s on [0, 2pi] encloses the unit disc
        // clockwise in the (X, Y) orientation of the integrand: area -> -pi.
        let m = 100_000;
        let x: Vec<f64> = (0..=m).map(|i| (i as f64 / m as f64 * std::f64::consts::TAU).cos() - 1.0).collect();
        let y: Vec<f64> = (0..=m).map(|i| (i as f64 / m as f64 * std::f64::consts::TAU).sin()).collect();
        let a = levy_area(&x, &y).unwrap();
        assert_abs_diff_eq!(a, -std::f64::consts::PI, epsilon = 1e-3);
    }

    #[test]
    fn levy_area_antisymmetry() {
        let cfg = SimConfig::new(7, 0.01, 1.0, 1).unwrap();
        let p = sample_bm_path(&cfg, 2, 0).unwrap();
        let a = levy_area(&p.components[0], &p.components[1]).unwrap();
        let b = levy_area(&p.components[1], &p.components[0]).unwrap();
        assert_eq!(a, -b);
        assert!(a != 0.0);
    }

    #[test]
    fn levy_charfn_values() {
        assert_eq!(levy_area_charfn(0.0, 1.0, 3.0, 4).unwrap(), 1.0);
        // dim_pairs=1, t=1, b=1: at r_sq=0 only the sinh ratio survives;
        // at r_sq=2t the value is (1/sinh 1) exp(1 - coth 1).
        assert_abs_diff_eq!(
            levy_area_charfn(1.0, 1.0, 0.0, 1).unwrap(),
            0.85091812823932156,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            levy_area_charfn(1.0, 1.0, 2.0, 1).unwrap(),
            0.62221185143506075,
            epsilon = 1e-14
        );
        assert!(levy_area_charfn(1.0, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn levy_charfn_modulus_bounded() {
        for &b in &[-3.0, -0.5, 1e-9, 0.7, 2.0, 25.0] {
            for &r in &[0.0, 0.3, 4.0] {
                let v = levy_area_charfn(b, 0.8, r, 3).unwrap();
                assert!(v > 0.0 && v <= 1.0 + 1e-15, "b={b} r={r} v={v}");
            }
        }
    }

    #[test]
    fn levy_charfn_matches_conditioned_monte_carlo() {
        // Brute-force oracle: planar BM, bin on the endpoint norm, average
        // exp(i 2b S(t)). The conditional law is symmetric, so the mean is
        // real; compare against the sinh-ratio formula at the bin mean.
        let t = 1.0;
        let b = 0.8;
        let cfg = SimConfig::new(2024, 0.01, t, 1).unwrap();
        let mut inside = Vec::new();
        for sid in 0..40_000u64 {
            let p = sample_bm_path(&cfg, 2, sid).unwrap();
            let (xe, ye) = (*p.components[0].last().unwrap(), *p.components[1].last().unwrap());
            let r_sq = xe * xe + ye * ye;
            if (0.5..1.5).contains(&r_sq) {
                let s = levy_area(&p.components[0], &p.components[1]).unwrap();
                inside.push(((2.0 * b * s).cos(), r_sq));
            }
        }
        assert!(inside.len() > 2_000);
        let m = inside.len() as f64;
        let mean_cos = inside.iter().map(|v| v.0).sum::<f64>() / m;
        let se = (inside.iter().map(|v| (v.0 - mean_cos) * (v.0 - mean_cos)).sum::<f64>() / (m * (m - 1.0))).sqrt();
        let mean_r = inside.iter().map(|v| v.1).sum::<f64>() / m;
        let predicted = levy_area_charfn(b, t, mean_r, 1).unwrap();
        assert!(
            (mean_cos - predicted).abs() < 4.0 * se + 0.01,
            "mc {mean_cos} vs formula {predicted} (se {se})"
        );
    }
}
