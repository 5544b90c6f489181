//! Statistical verification machinery: Kolmogorov-Smirnov tests with
//! asymptotic p-values, empirical characteristic functions with standard
//! errors, and an importance-sampling integrator for kernel
//! normalizations. Every check is reported as a [`TestReport`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_streams;
use crate::rng::substream;

/// Significance level shared by the whole verification suite.
pub const KS_LEVEL: f64 = 0.01;

/// Minimum sample count accepted by the KS report builders.
pub const MIN_KS_SAMPLES: usize = 20;

/// Outcome of one named statistical or numerical check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    /// p-value for hypothesis tests, tolerance for deterministic checks.
    pub threshold_or_pvalue: f64,
    pub n_used: u64,
    pub passed: bool,
    pub details: BTreeMap<String, String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold_or_pvalue: f64, n_used: u64, passed: bool) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            threshold_or_pvalue,
            n_used,
            passed,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.details.insert(key.into(), value.to_string());
        self
    }

    /// One human-readable line, used by the acceptance suite and the CLI.
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<44} stat={:<12.6} threshold_or_p={:<12.6} n={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold_or_pvalue,
            self.n_used
        )
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(z) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 z^2)`, truncated at 100 terms.
pub fn kolmogorov_survival(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let mut q = 0.0;
    for k in 1..=100u32 {
        let term = (-2.0 * (k * k) as f64 * z * z).exp();
        if term == 0.0 {
            break;
        }
        q += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * q).clamp(0.0, 1.0)
}

/// One-sample KS statistic `sup |F_m - F|` against a reference CDF.
/// No sample-size guard; the report builder enforces it.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    d
}

/// Two-sample KS statistic between `a` and `b`.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_unstable_by(|u, v| u.total_cmp(v));
    ys.sort_unstable_by(|u, v| u.total_cmp(v));
    let (m, n) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < m && j < n {
        let t = xs[i].min(ys[j]);
        while i < m && xs[i] <= t {
            i += 1;
        }
        while j < n && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov test; passes iff the asymptotic p-value
/// exceeds [`KS_LEVEL`].
pub fn ks_one_sample<F: Fn(f64) -> f64>(name: &str, samples: &[f64], cdf: F) -> Result<TestReport> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::Domain(format!(
            "ks_one_sample needs >= {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let d = ks_statistic(samples, cdf);
    let m = samples.len() as f64;
    let p = kolmogorov_survival(m.sqrt() * d);
    Ok(TestReport::new(name, d, p, samples.len() as u64, p > KS_LEVEL))
}

/// Two-sample Kolmogorov-Smirnov test; passes iff the asymptotic p-value
/// exceeds [`KS_LEVEL`].
pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.len() < MIN_KS_SAMPLES || b.len() < MIN_KS_SAMPLES {
        return Err(Error::Domain(format!(
            "ks_two_sample needs >= {MIN_KS_SAMPLES} samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d = ks_two_sample_statistic(a, b);
    let m = a.len() as f64;
    let n = b.len() as f64;
    let eff = m * n / (m + n);
    let p = kolmogorov_survival(eff.sqrt() * d);
    Ok(TestReport::new(name, d, p, (a.len() + b.len()) as u64, p > KS_LEVEL))
}

/// Empirical characteristic function with componentwise standard errors.
#[derive(Debug, Clone, Copy)]
pub struct CharFnEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl CharFnEstimate {
    /// Checks `|estimate - reference|` componentwise against `k` standard
    /// errors (with an epsilon floor so exact cases do not fail on ties).
    pub fn matches(&self, reference: Complex64, k: f64) -> bool {
        let floor = 1e-12;
        (self.value.re - reference.re).abs() <= k * self.se_re + floor
            && (self.value.im - reference.im).abs() <= k * self.se_im + floor
    }
}

/// Mean of `exp(i <freq, sample>)` over d-dimensional points.
pub fn empirical_charfn(samples: &[Vec<f64>], freq: &[f64]) -> Result<CharFnEstimate> {
    if samples.len() < 100 {
        return Err(Error::Domain(format!(
            "empirical_charfn needs >= 100 samples, got {}",
            samples.len()
        )));
    }
    let m = samples.len() as f64;
    let mut sum_c = 0.0;
    let mut sum_s = 0.0;
    let mut sum_c2 = 0.0;
    let mut sum_s2 = 0.0;
    for x in samples {
        if x.len() != freq.len() {
            return Err(Error::Mismatch(format!(
                "sample dimension {} vs frequency dimension {}",
                x.len(),
                freq.len()
            )));
        }
        let phase: f64 = x.iter().zip(freq).map(|(xi, fi)| xi * fi).sum();
        let (s, c) = phase.sin_cos();
        sum_c += c;
        sum_s += s;
        sum_c2 += c * c;
        sum_s2 += s * s;
    }
    let mean_c = sum_c / m;
    let mean_s = sum_s / m;
    let var_c = (sum_c2 / m - mean_c * mean_c).max(0.0);
    let var_s = (sum_s2 / m - mean_s * mean_s).max(0.0);
    Ok(CharFnEstimate {
        value: Complex64::new(mean_c, mean_s),
        se_re: (var_c / m).sqrt(),
        se_im: (var_s / m).sqrt(),
    })
}

/// Product proposal of independent Cauchy coordinates, heavy-tailed enough
/// to dominate every kernel this crate integrates.
#[derive(Debug, Clone)]
pub struct CauchyProposal {
    pub scales: Vec<f64>,
}

impl CauchyProposal {
    pub fn isotropic(dim: usize, scale: f64) -> Self {
        CauchyProposal { scales: vec![scale; dim] }
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.scales
            .iter()
            .zip(x)
            .map(|(s, xi)| s / (std::f64::consts::PI * (s * s + xi * xi)))
            .product()
    }
}

/// Importance-sampling estimate with standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub effective_samples: f64,
}

/// Importance-sampling integral of `f` over R^d under a Cauchy product
/// proposal. Errors out if the effective sample size collapses below
/// `count / 100`.
pub fn mc_integrate<F>(f: F, proposal: &CauchyProposal, count: u64, seed: u64, stream_id: u64) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    use rand_distr::{Cauchy, Distribution};
    let dim = proposal.scales.len();
    let chunks = 64u64;
    let per_chunk = count.div_ceil(chunks);
    let sums = map_streams(chunks, |c| {
        let mut rng = substream(seed, stream_id * chunks + c, 0xC0);
        let dists: Vec<Cauchy<f64>> =
            proposal.scales.iter().map(|&s| Cauchy::new(0.0, s).expect("valid scale")).collect();
        let mut x = vec![0.0; dim];
        let mut s = 0.0;
        let mut s2 = 0.0;
        let n = per_chunk.min(count.saturating_sub(c * per_chunk));
        for _ in 0..n {
            for (xi, d) in x.iter_mut().zip(&dists) {
                *xi = d.sample(&mut rng);
            }
            let w = f(&x) / proposal.density(&x);
            s += w;
            s2 += w * w;
        }
        (s, s2, n)
    });
    let (sum, sum2, used) = sums
        .into_iter()
        .fold((0.0, 0.0, 0u64), |acc, v| (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2));
    let m = used as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0);
    let ess = if sum2 > 0.0 { sum * sum / sum2 } else { m };
    if ess < m / 100.0 {
        return Err(Error::Degenerate(format!(
            "effective sample size {ess:.1} below {:.1} (weights too heavy for the proposal)",
            m / 100.0
        )));
    }
    Ok(McEstimate { value: mean, std_error: (var / m).sqrt(), effective_samples: ess })
}

/// Standard normal CDF via the complementary error function.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Cauchy CDF with the arctangent form.
pub fn cauchy_cdf(x: f64, location: f64, scale: f64) -> f64 {
    0.5 + (x - location).atan2(scale) / std::f64::consts::PI
}

/// Complementary error function (Numerical Recipes rational Chebyshev fit,
/// |relative error| < 1.2e-7, refined by one Newton step to ~1e-15).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 2.0 / (2.0 + z);
    let ty = 4.0 * t - 2.0;
    const COF: [f64; 28] = [
        -1.3026537197817094,
        6.4196979235649026e-1,
        1.9476473204185836e-2,
        -9.561514786808631e-3,
        -9.46595344482036e-4,
        3.66839497852761e-4,
        4.2523324806907e-5,
        -2.0278578112534e-5,
        -1.624290004647e-6,
        1.303655835580e-6,
        1.5626441722e-8,
        -8.5238095915e-8,
        6.529054439e-9,
        5.059343495e-9,
        -9.91364156e-10,
        -2.27365122e-10,
        9.6467911e-11,
        2.394038e-12,
        -6.886027e-12,
        8.94487e-13,
        3.13092e-13,
        -1.12708e-13,
        3.81e-16,
        7.106e-15,
        -1.523e-15,
        -9.4e-17,
        1.21e-16,
        -2.8e-17,
    ];
    let mut d = 0.0;
    let mut dd = 0.0;
    for &c in COF.iter().rev().take(COF.len() - 1) {
        let tmp = d;
        d = ty * d - dd + c;
        dd = tmp;
    }
    let ans = t * (-z * z + 0.5 * (COF[0] + ty * d) - dd).exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn normal_cdf_anchors() {
        assert_abs_diff_eq!(standard_normal_cdf(0.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(standard_normal_cdf(1.0), 0.84134474606854293, epsilon = 1e-9);
        assert_abs_diff_eq!(standard_normal_cdf(-2.5), 0.0062096653257761352, epsilon = 1e-10);
    }

    #[test]
    fn ks_statistic_hand_cases() {
        // A single point at 0.5 against U(0,1): sup gap is exactly 1/2.
        assert_abs_diff_eq!(ks_statistic(&[0.5], |x| x), 0.5, epsilon = 1e-15);
        // Samples placed at the quantiles of the reference law equioscillate
        // with D = 1/(2m).
        let m = 40;
        let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!(d <= 1.0 / (2.0 * m as f64) + 1e-12, "d = {d}");
    }

    #[test]
    fn ks_two_sample_hand_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample_statistic(&a, &[2.0, 1.0, 4.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        let xs = [0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27];
        let ys = [0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.0, 0.56, 0.03];
        assert_abs_diff_eq!(ks_two_sample_statistic(&xs, &ys), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn ks_guards_sample_count() {
        assert!(ks_one_sample("tiny", &[0.5; 5], |x| x).is_err());
        assert!(ks_two_sample("tiny", &[0.5; 25], &[0.5; 5]).is_err());
    }

    #[test]
    fn ks_level_calibration() {
        // Under the null both tests should pass at least 95% of the time.
        let mut one_ok = 0;
        let mut two_ok = 0;
        let trials = 100;
        for seed in 0..trials {
            let draw = |comp: u32| -> Vec<f64> {
                let mut rng = substream(7_000 + seed, 0, comp);
                (0..800).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            let a = draw(0);
            let b = draw(1);
            if ks_one_sample("cal1", &a, standard_normal_cdf).unwrap().passed {
                one_ok += 1;
            }
            if ks_two_sample("cal2", &a, &b).unwrap().passed {
                two_ok += 1;
            }
        }
        assert!(one_ok >= 95, "one-sample calibration: {one_ok}/{trials}");
        assert!(two_ok >= 95, "two-sample calibration: {two_ok}/{trials}");
    }

    #[test]
    fn charfn_trivial_cases() {
        let zeros = vec![vec![0.0, 0.0]; 200];
        let est = empirical_charfn(&zeros, &[0.7, -0.3]).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
        assert_eq!((est.se_re, est.se_im), (0.0, 0.0));

        let mut rng = substream(5, 0, 0);
        let samples: Vec<Vec<f64>> = (0..500).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let est = empirical_charfn(&samples, &[0.0]).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn charfn_gaussian_reference() {
        let mut rng = substream(17, 0, 0);
        let samples: Vec<Vec<f64>> = (0..100_000).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let est = empirical_charfn(&samples, &[1.0]).unwrap();
        let want = (-0.5f64).exp();
        assert!(est.matches(Complex64::new(want, 0.0), 4.0), "{:?} vs {want}", est.value);
    }

    #[test]
    fn charfn_se_scales_like_inverse_sqrt_count() {
        let mut rng = substream(23, 0, 0);
        let samples: Vec<Vec<f64>> = (0..40_000).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let small = empirical_charfn(&samples[..10_000], &[1.0]).unwrap();
        let large = empirical_charfn(&samples, &[1.0]).unwrap();
        let ratio = small.se_re / large.se_re;
        assert!((ratio - 2.0).abs() < 0.4, "ratio = {ratio}");
    }

    #[test]
    fn mc_integrate_recovers_normalizations() {
        let proposal = CauchyProposal::isotropic(1, 1.0);
        // The proposal's own density integrates to 1 with zero variance.
        let p = proposal.clone();
        let est = mc_integrate(move |x| p.density(x), &proposal, 20_000, 3, 0).unwrap();
        assert!((est.value - 1.0).abs() <= 4.0 * est.std_error + 1e-12);

        // A Cauchy density of a different scale under the same proposal.
        let est = mc_integrate(
            |x| 0.5 / (std::f64::consts::PI * (0.25 + x[0] * x[0])),
            &proposal,
            50_000,
            4,
            1,
        )
        .unwrap();
        assert!((est.value - 1.0).abs() <= 4.0 * est.std_error, "{est:?}");

        // Linearity.
        let p = proposal.clone();
        let est = mc_integrate(move |x| 2.0 * p.density(x), &proposal, 20_000, 5, 2).unwrap();
        assert!((est.value - 2.0).abs() <= 4.0 * est.std_error + 1e-12);
    }
}
