//! The complex hyperbolic space H_c^n in half-space coordinates:
//! distance, exact-form sampler with stochastic areas, Poisson kernel,
//! and the limiting characteristic function of the joint boundary law.

use num_complex::Complex64;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::{DriftParam, SimConfig};
use crate::error::{Error, Result};
use crate::parallel::map_streams;
use crate::quad::{integrate_semi_infinite_from, QuadratureSpec};
use crate::rng::{substream, IncrementStreams};
use crate::special::log_gamma;
use crate::Trajectory;

/// A point of H_c^n, n >= 2: first coordinate split into (x1, y) with
/// y > 0, remaining coordinates interleaved as (x_2, y_2, ..., x_n, y_n).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint {
    pub x1: f64,
    pub y: f64,
    pub tilde: Vec<f64>,
}

impl ComplexPoint {
    pub fn new(x1: f64, y: f64, tilde: Vec<f64>) -> Result<Self> {
        if tilde.is_empty() || tilde.len() % 2 != 0 {
            return Err(Error::Domain(format!(
                "tilde must hold 2(n-1) coordinates with n >= 2, got length {}",
                tilde.len()
            )));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("height must be positive, got {y}")));
        }
        Ok(ComplexPoint { x1, y, tilde })
    }

    pub fn n(&self) -> usize {
        self.tilde.len() / 2 + 1
    }

    /// (x_k, y_k) for k = 2..=n.
    pub fn pair(&self, k: usize) -> (f64, f64) {
        let i = 2 * (k - 2);
        (self.tilde[i], self.tilde[i + 1])
    }

    /// Flat coordinates (x1, x_2, y_2, ..., x_n, y_n) of the boundary
    /// block, as consumed by characteristic-function comparisons.
    pub fn boundary_coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.tilde.len());
        v.push(self.x1);
        v.extend_from_slice(&self.tilde);
        v
    }
}

/// Frequency (p, q_2..q_n, r_2..r_n) of the joint characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFreq {
    pub p: f64,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl ComplexFreq {
    pub fn new(p: f64, q: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if q.len() != r.len() || q.is_empty() {
            return Err(Error::Mismatch("q and r must have equal length n-1 >= 1".into()));
        }
        Ok(ComplexFreq { p, q, r })
    }

    /// Flat frequency vector matching [`ComplexPoint::boundary_coords`].
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.q.len());
        v.push(self.p);
        for (qk, rk) in self.q.iter().zip(&self.r) {
            v.push(*qk);
            v.push(*rk);
        }
        v
    }
}

/// Phi and phi of the distance and kernel formulas, evaluated between the
/// base point `z` and the pair `(x1', tilde')` (the height of the second
/// point does not enter).
fn phi_pair(z: &ComplexPoint, x1p: f64, tilde_p: &[f64]) -> (f64, f64) {
    let dz2: f64 = z.tilde.iter().zip(tilde_p).map(|(a, b)| (a - b) * (a - b)).sum();
    let big_phi = z.y * z.y + dz2;
    let mut small_phi = x1p - z.x1;
    for k in 0..z.tilde.len() / 2 {
        let (xk, yk) = (z.tilde[2 * k], z.tilde[2 * k + 1]);
        let (xkp, ykp) = (tilde_p[2 * k], tilde_p[2 * k + 1]);
        small_phi += ykp * xk - xkp * yk;
    }
    (big_phi, small_phi)
}

/// Distance from
/// `cosh^2 d = ((y'^2 + Phi)^2 + 4 phi^2) / (4 y^2 y'^2)`.
pub fn dist_complex(z: &ComplexPoint, z2: &ComplexPoint) -> Result<f64> {
    if z.n() != z2.n() {
        return Err(Error::Mismatch(format!("dimensions {} vs {}", z.n(), z2.n())));
    }
    let (big_phi, small_phi) = phi_pair(z, z2.x1, &z2.tilde);
    let num = (z2.y * z2.y + big_phi).powi(2) + 4.0 * small_phi * small_phi;
    let cosh2 = num / (4.0 * z.y * z.y * z2.y * z2.y);
    Ok(cosh2.max(1.0).sqrt().acosh())
}

struct ComplexStepper {
    streams: IncrementStreams,
    mu: f64,
    dt: f64,
    y0: f64,
    b: f64,
    t: f64,
    x1: f64,
    tilde: Vec<f64>,
    dw: Vec<f64>,
}

impl ComplexStepper {
    fn new(z0: &ComplexPoint, config: &SimConfig, stream_id: u64) -> Self {
        let n = z0.n();
        let dt = config.dt_eff();
        // Components: 0 = B (height), 1 = w_2 (x1 driver), then
        // (w_{2k-1}, w_{2k}) pairs for k = 2..=n.
        ComplexStepper {
            streams: IncrementStreams::new(config.seed, stream_id, (2 * n) as u32, dt),
            mu: DriftParam::complex_space(n).mu(),
            dt,
            y0: z0.y,
            b: 0.0,
            t: 0.0,
            x1: z0.x1,
            tilde: z0.tilde.clone(),
            dw: vec![0.0; 2 * n],
        }
    }

    fn y(&self) -> f64 {
        self.y0 * (self.b - self.mu * self.t).exp()
    }

    /// One Ito step. The tilde pairs move with the left-point height; the
    /// x1 coordinate collects `Y^2 dw_2` plus twice the stochastic-area
    /// increments `1/2 (Y_k dX_k - X_k dY_k)` in the same left-point
    /// convention.
    fn step(&mut self) {
        let y = self.y();
        self.streams.next_all(&mut self.dw);
        let mut dx1 = y * y * self.dw[1];
        for k in 0..self.tilde.len() / 2 {
            let (xk, yk) = (self.tilde[2 * k], self.tilde[2 * k + 1]);
            let dxk = y * self.dw[2 + 2 * k];
            let dyk = y * self.dw[3 + 2 * k];
            dx1 += yk * dxk - xk * dyk; // 2 * S_k increment
            self.tilde[2 * k] = xk + dxk;
            self.tilde[2 * k + 1] = yk + dyk;
        }
        self.x1 += dx1;
        self.b += self.dw[0];
        self.t += self.dt;
    }

    fn point(&self) -> ComplexPoint {
        ComplexPoint { x1: self.x1, y: self.y(), tilde: self.tilde.clone() }
    }
}

/// Grid trajectory of the Brownian motion on H_c^n started at `z0`;
/// drift forced to `mu = n`.
pub fn sample_complex_bm(z0: &ComplexPoint, config: &SimConfig, stream_id: u64) -> Result<Trajectory<ComplexPoint>> {
    config.validate()?;
    let n_steps = config.n_steps();
    let mut s = ComplexStepper::new(z0, config, stream_id);
    let mut t = Vec::with_capacity(n_steps + 1);
    let mut points = Vec::with_capacity(n_steps + 1);
    t.push(0.0);
    points.push(s.point());
    for i in 1..=n_steps {
        s.step();
        t.push(i as f64 * s.dt);
        points.push(s.point());
    }
    Ok(Trajectory { t, points })
}

/// Terminal point only.
pub fn sample_complex_terminal(z0: &ComplexPoint, config: &SimConfig, stream_id: u64) -> Result<ComplexPoint> {
    config.validate()?;
    let mut s = ComplexStepper::new(z0, config, stream_id);
    for _ in 0..config.n_steps() {
        s.step();
    }
    Ok(s.point())
}

/// Terminal points for stream ids `0..n_samples`.
pub fn sample_complex_terminal_batch(z0: &ComplexPoint, config: &SimConfig) -> Result<Vec<ComplexPoint>> {
    config.validate()?;
    Ok(map_streams(config.n_samples, |sid| {
        sample_complex_terminal(z0, config, sid).expect("config validated")
    }))
}

/// Poisson kernel of the boundary R^{2n-1}:
/// `f_n = 2^{2n-1} Gamma(n) y^{2n} / (pi^n (4 phi^2 + Phi^2)^n)`,
/// with Phi and phi between `z0` and the boundary point `(x1', tilde')`.
pub fn poisson_kernel_complex(n: usize, x1p: f64, tilde_p: &[f64], z0: &ComplexPoint) -> Result<f64> {
    if z0.n() != n || n < 2 {
        return Err(Error::Mismatch(format!("point dimension {} vs n={n} (n >= 2)", z0.n())));
    }
    if tilde_p.len() != 2 * (n - 1) {
        return Err(Error::Mismatch(format!(
            "boundary tilde must have length 2(n-1), got {}",
            tilde_p.len()
        )));
    }
    let nf = n as f64;
    let (big_phi, small_phi) = phi_pair(z0, x1p, tilde_p);
    let log_c = (2.0 * nf - 1.0) * std::f64::consts::LN_2 + log_gamma(nf)? - nf * std::f64::consts::PI.ln();
    let denom = 4.0 * small_phi * small_phi + big_phi * big_phi;
    Ok((log_c + 2.0 * nf * z0.y.ln() - nf * denom.ln()).exp())
}

/// Limiting characteristic function of `(X(t), Z~(t))` as t grows.
///
/// After the cotangent change of variable and the rescaling `kappa = |p| k`
/// the limit reads, uniformly in the sign of p,
///
/// `e^{i f} y^{2n} / (2^n Gamma(n)) int_{|p|}^inf (kappa^2 - p^2)^{n-1}
///  kappa^{1-n} exp(-y^2 kappa / 2 - G/(2 kappa)) d kappa`,
///
/// with `f = p x1 + sum(q_k x_k + r_k y_k)` and
/// `G = sum((q_k + p y_k)^2 + (r_k - p x_k)^2)` (even under joint sign
/// flip, which realizes the conjugate symmetry). For |p| below 1e-8 the
/// value is interpolated linearly between evaluations at p = ±1e-6.
pub fn limit_charfn_complex(
    n: usize,
    freq: &ComplexFreq,
    z0: &ComplexPoint,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if z0.n() != n || freq.q.len() != n - 1 {
        return Err(Error::Mismatch(format!(
            "expected n={n}: point has n={}, frequency has n={}",
            z0.n(),
            freq.q.len() + 1
        )));
    }
    if freq.p.abs() < 1e-8 {
        let h = 1e-6;
        let lo = limit_charfn_complex_at(n, -h, freq, z0, spec)?;
        let hi = limit_charfn_complex_at(n, h, freq, z0, spec)?;
        let w = (freq.p + h) / (2.0 * h);
        return Ok(lo * (1.0 - w) + hi * w);
    }
    limit_charfn_complex_at(n, freq.p, freq, z0, spec)
}

fn limit_charfn_complex_at(
    n: usize,
    p: f64,
    freq: &ComplexFreq,
    z0: &ComplexPoint,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let nf = n as f64;
    let mut phase = p * z0.x1;
    let mut g = 0.0;
    for k in 0..n - 1 {
        let (xk, yk) = (z0.tilde[2 * k], z0.tilde[2 * k + 1]);
        phase += freq.q[k] * xk + freq.r[k] * yk;
        let u = freq.q[k] + p * yk;
        let v = freq.r[k] - p * xk;
        g += u * u + v * v;
    }
    let y2 = z0.y * z0.y;
    let ap = p.abs();
    let integral = integrate_semi_infinite_from(
        move |kappa| {
            let band = (kappa * kappa - ap * ap).max(0.0);
            if band == 0.0 {
                return 0.0;
            }
            let log_val = (nf - 1.0) * band.ln() + (1.0 - nf) * kappa.ln() - y2 * kappa / 2.0
                - if g > 0.0 { g / (2.0 * kappa) } else { 0.0 };
            log_val.exp()
        },
        ap,
        spec,
    )?;
    let log_pref = nf * y2.ln() - nf * std::f64::consts::LN_2 - log_gamma(nf)?;
    Ok(Complex64::from_polar(1.0, phase) * (log_pref.exp() * integral))
}

/// Exact draws from the kernel law `f_n(.; z0)` for n = z0.n():
/// the tilde block is `tilde + y v` with `v` a 2(n-1)-dimensional scaled
/// Student-type vector (normal over sqrt of Gamma(n, 2)), and given the
/// tilde block, phi is `(Phi/2) u` with `u` normal over a chi(3) factor;
/// x1' is then solved from the phi definition. Both mixtures reproduce the
/// kernel's algebraic tails exactly.
pub fn sample_poisson_kernel_complex(
    z0: &ComplexPoint,
    count: usize,
    seed: u64,
    stream_id: u64,
) -> Vec<ComplexPoint> {
    let n = z0.n();
    let mut rng = substream(seed, stream_id, 0xD1);
    let tilde_mix = Gamma::new(n as f64, 2.0).expect("valid shape");
    let chi2_3 = Gamma::new(1.5, 2.0).expect("valid shape");
    (0..count)
        .map(|_| {
            let s: f64 = tilde_mix.sample(&mut rng);
            let scale = z0.y / s.sqrt();
            let mut tilde_p = Vec::with_capacity(2 * (n - 1));
            let mut v2 = 0.0;
            for base in &z0.tilde {
                let gsn: f64 = StandardNormal.sample(&mut rng);
                let dv = scale * gsn;
                v2 += dv * dv;
                tilde_p.push(base + dv);
            }
            let big_phi = z0.y * z0.y + v2;
            let s3: f64 = chi2_3.sample(&mut rng);
            let gu: f64 = StandardNormal.sample(&mut rng);
            let u = gu / s3.sqrt();
            let target_phi = 0.5 * big_phi * u;
            // phi = x1' - x1 + sum(y_k' x_k - x_k' y_k); solve for x1'.
            let mut cross = 0.0;
            for k in 0..n - 1 {
                let (xk, yk) = (z0.tilde[2 * k], z0.tilde[2 * k + 1]);
                cross += tilde_p[2 * k + 1] * xk - tilde_p[2 * k] * yk;
            }
            ComplexPoint { x1: z0.x1 + target_phi - cross, y: z0.y, tilde: tilde_p }
        })
        .collect()
}

/// Kernel value at flat boundary coordinates `(x1', tilde')` for a base
/// point at the boundary origin with height `y`.
pub fn poisson_kernel_complex_eval(n: usize, coords: &[f64], y: f64) -> Result<f64> {
    if coords.len() != 2 * n - 1 {
        return Err(Error::Mismatch(format!(
            "expected 2n-1 = {} boundary coordinates, got {}",
            2 * n - 1,
            coords.len()
        )));
    }
    let z0 = ComplexPoint::new(0.0, y, vec![0.0; 2 * (n - 1)])?;
    poisson_kernel_complex(n, coords[0], &coords[1..], &z0)
}

/// Importance-sampling normalization of the kernel over R^{2n-1}; equals 1.
pub fn kernel_normalization_complex(
    z0: &ComplexPoint,
    count: u64,
    seed: u64,
) -> Result<crate::stats::McEstimate> {
    use crate::stats::{mc_integrate, CauchyProposal};
    let n = z0.n();
    let dim = 2 * n - 1;
    // Scale 1/2 keeps the weight spikes near the kernel mode small; wider
    // proposals cost a 3-7x larger standard error here.
    let proposal = CauchyProposal::isotropic(dim, 0.5);
    let z = z0.clone();
    mc_integrate(
        move |x| poisson_kernel_complex(n, x[0], &x[1..], &z).unwrap_or(0.0),
        &proposal,
        count,
        seed,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{empirical_charfn, ks_two_sample};
    use approx::assert_abs_diff_eq;

    fn base_point() -> ComplexPoint {
        ComplexPoint::new(0.0, 1.0, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn distance_basics() {
        let z = base_point();
        assert_eq!(dist_complex(&z, &z).unwrap(), 0.0);
        // Vertical pair (0,1,0,0) to (0,e,0,0): distance 1.
        let z2 = ComplexPoint::new(0.0, std::f64::consts::E, vec![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dist_complex(&z, &z2).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dist_complex(&z2, &z).unwrap(), 1.0, epsilon = 1e-14);
        let z3 = ComplexPoint::new(0.0, 1.0, vec![0.0; 4]).unwrap();
        assert!(dist_complex(&z, &z3).is_err());
        assert!(ComplexPoint::new(0.0, -1.0, vec![0.0, 0.0]).is_err());
        assert!(ComplexPoint::new(0.0, 1.0, vec![0.0]).is_err());
    }

    #[test]
    fn distance_finite_and_symmetric_on_random_pairs() {
        let mut rng = substream(31, 0, 0);
        for _ in 0..50 {
            let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
            let a = ComplexPoint::new(draw(), draw().abs() + 0.1, vec![draw(), draw()]).unwrap();
            let b = ComplexPoint::new(draw(), draw().abs() + 0.1, vec![draw(), draw()]).unwrap();
            let d1 = dist_complex(&a, &b).unwrap();
            let d2 = dist_complex(&b, &a).unwrap();
            assert!(d1.is_finite() && d1 >= 0.0);
            assert_abs_diff_eq!(d1, d2, epsilon = 1e-10);
        }
    }

    #[test]
    fn trajectory_starts_at_z0() {
        let cfg = SimConfig::new(4, 0.01, 0.05, 1).unwrap();
        let z0 = ComplexPoint::new(0.4, 1.5, vec![0.2, -0.7]).unwrap();
        let traj = sample_complex_bm(&z0, &cfg, 0).unwrap();
        assert_eq!(traj.points[0], z0);
        let term = sample_complex_terminal(&z0, &cfg, 0).unwrap();
        assert_eq!(&term, traj.terminal());
    }

    #[test]
    fn log_height_moments() {
        // n=2, T=4: log Y(T) ~ N(-nT, T).
        let cfg = SimConfig::new(61, 0.01, 4.0, 10_000).unwrap();
        let logs: Vec<f64> =
            sample_complex_terminal_batch(&base_point(), &cfg).unwrap().iter().map(|p| p.y.ln()).collect();
        let m = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / m;
        let var = logs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        assert!((mean + 8.0).abs() < 4.0 * (4.0f64 / m).sqrt(), "mean {mean}");
        assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / (m - 1.0)).sqrt(), "var {var}");
    }

    #[test]
    fn tilde_components_are_martingales() {
        let cfg = SimConfig::new(62, 0.01, 4.0, 8_000).unwrap();
        let z0 = ComplexPoint::new(0.0, 1.0, vec![0.8, -0.3]).unwrap();
        let pts = sample_complex_terminal_batch(&z0, &cfg).unwrap();
        for j in 0..2 {
            let vals: Vec<f64> = pts.iter().map(|p| p.tilde[j]).collect();
            let m = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            assert!((mean - z0.tilde[j]).abs() < 4.0 * se, "tilde[{j}] mean {mean}");
        }
    }

    #[test]
    fn kernel_value_and_decay() {
        // n=2, z0=(0,1,0,0), boundary origin: 8/pi^2.
        let v = poisson_kernel_complex(2, 0.0, &[0.0, 0.0], &base_point()).unwrap();
        assert_abs_diff_eq!(v, 0.81056946913870217, epsilon = 1e-13);
        let far = poisson_kernel_complex(2, 500.0, &[30.0, -40.0], &base_point()).unwrap();
        assert!(far > 0.0 && far < 1e-8);
    }

    #[test]
    fn kernel_normalization_by_importance_sampling() {
        let est = kernel_normalization_complex(&base_point(), 400_000, 12).unwrap();
        assert!(
            (est.value - 1.0).abs() < 0.01f64.max(4.0 * est.std_error),
            "normalization {} +- {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn charfn_at_zero_frequency_is_one() {
        let freq = ComplexFreq::new(0.0, vec![0.0], vec![0.0]).unwrap();
        let v = limit_charfn_complex(2, &freq, &base_point(), &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn charfn_conjugate_symmetry_and_modulus() {
        let z0 = ComplexPoint::new(0.3, 1.0, vec![0.5, -0.2]).unwrap();
        let spec = QuadratureSpec::default();
        for (p, q, r) in [(0.7, 0.5, -0.4), (1.5, 0.0, 0.3), (-0.4, 1.0, 0.2)] {
            let plus = limit_charfn_complex(2, &ComplexFreq::new(p, vec![q], vec![r]).unwrap(), &z0, &spec).unwrap();
            let minus =
                limit_charfn_complex(2, &ComplexFreq::new(-p, vec![-q], vec![-r]).unwrap(), &z0, &spec).unwrap();
            assert_abs_diff_eq!(plus.re, minus.re, epsilon = 1e-9);
            assert_abs_diff_eq!(plus.im, -minus.im, epsilon = 1e-9);
            assert!(plus.norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn charfn_reference_value() {
        // Desk-checked against 25-digit quadrature of the same integral and
        // against 1.2e5-path simulation (both agree to MC error).
        let z0 = ComplexPoint::new(0.3, 1.0, vec![0.5, -0.2]).unwrap();
        let freq = ComplexFreq::new(0.7, vec![0.5], vec![-0.4]).unwrap();
        let v = limit_charfn_complex(2, &freq, &z0, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(v.re, 0.6562872620920446, epsilon = 1e-9);
        assert_abs_diff_eq!(v.im, 0.39339802620217645, epsilon = 1e-9);
    }

    #[test]
    fn charfn_matches_simulation() {
        // Empirical CF of terminal points at T=8 (mu=2 leaves tail e^{-32}).
        let z0 = ComplexPoint::new(0.3, 1.0, vec![0.5, -0.2]).unwrap();
        let cfg = SimConfig::new(77, 2e-3, 8.0, 10_000).unwrap();
        let pts = sample_complex_terminal_batch(&z0, &cfg).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.boundary_coords()).collect();
        let freq = ComplexFreq::new(1.0, vec![0.5], vec![-0.5]).unwrap();
        let est = empirical_charfn(&coords, &freq.flat()).unwrap();
        let ana = limit_charfn_complex(2, &freq, &z0, &QuadratureSpec::default()).unwrap();
        assert!(est.matches(ana, 4.0), "emp {:?} vs {ana}", est.value);
    }

    #[test]
    fn kernel_sampler_agrees_with_process_law() {
        // Two-sample KS on each 1-d marginal: simulated terminal points at
        // T=8 vs exact kernel draws.
        let z0 = ComplexPoint::new(0.3, 1.0, vec![0.5, -0.2]).unwrap();
        let cfg = SimConfig::new(78, 2e-3, 8.0, 4_000).unwrap();
        let sim = sample_complex_terminal_batch(&z0, &cfg).unwrap();
        let ker = sample_poisson_kernel_complex(&z0, 4_000, 79, 0);
        for j in 0..3 {
            let a: Vec<f64> = sim.iter().map(|p| p.boundary_coords()[j]).collect();
            let b: Vec<f64> = ker.iter().map(|p| p.boundary_coords()[j]).collect();
            let rep = ks_two_sample(&format!("marginal{j}"), &a, &b).unwrap();
            assert!(rep.passed, "marginal {j}: {rep:?}");
        }
    }
}
