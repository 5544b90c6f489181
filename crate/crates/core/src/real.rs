//! The real hyperbolic half-space of dimension n+1: distance, exact-form
//! Brownian sampler, Poisson kernels with their Fourier transforms, the
//! first-hitting characteristic function, and the radial SDE.

use num_complex::Complex64;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::{DriftParam, SimConfig};
use crate::error::{Error, Result};
use crate::parallel::map_streams;
use crate::quad::{cosine_transform, integrate_semi_infinite, QuadratureSpec};
use crate::rng::{substream, IncrementStreams};
use crate::special::{bessel_k, log_gamma};
use crate::Trajectory;

/// A point (x, y) of the upper half-space, x in R^n, y > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl RealPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Domain("boundary dimension n must be >= 1".into()));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("height must be positive, got {y}")));
        }
        Ok(RealPoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Hyperbolic distance from `cosh d = (|x-x'|^2 + y^2 + y'^2) / (2 y y')`.
pub fn dist_real(z: &RealPoint, z2: &RealPoint) -> Result<f64> {
    if z.dim() != z2.dim() {
        return Err(Error::Mismatch(format!("dimensions {} vs {}", z.dim(), z2.dim())));
    }
    let dx2: f64 = z.x.iter().zip(&z2.x).map(|(a, b)| (a - b) * (a - b)).sum();
    let c = (dx2 + z.y * z.y + z2.y * z2.y) / (2.0 * z.y * z2.y);
    Ok(c.max(1.0).acosh())
}

struct RealStepper {
    streams: IncrementStreams,
    mu: f64,
    dt: f64,
    y0: f64,
    b: f64,
    t: f64,
    x: Vec<f64>,
    dw: Vec<f64>,
}

impl RealStepper {
    fn new(z0: &RealPoint, config: &SimConfig, stream_id: u64) -> Self {
        let n = z0.dim();
        let dt = config.dt_eff();
        RealStepper {
            streams: IncrementStreams::new(config.seed, stream_id, (n + 1) as u32, dt),
            mu: DriftParam::real_space(n).mu(),
            dt,
            y0: z0.y,
            b: 0.0,
            t: 0.0,
            x: z0.x.clone(),
            dw: vec![0.0; n + 1],
        }
    }

    fn y(&self) -> f64 {
        self.y0 * (self.b - self.mu * self.t).exp()
    }

    /// One Ito step: lateral coordinates move with the left-point height,
    /// then the driving motion advances.
    fn step(&mut self) {
        let y = self.y();
        self.streams.next_all(&mut self.dw);
        for (xj, dwj) in self.x.iter_mut().zip(self.dw.iter().skip(1)) {
            *xj += y * dwj;
        }
        self.b += self.dw[0];
        self.t += self.dt;
    }

    fn point(&self) -> RealPoint {
        RealPoint { x: self.x.clone(), y: self.y() }
    }
}

/// Full grid trajectory of the Brownian motion started at `z0`. The height
/// is evaluated exactly as a geometric Brownian motion at the grid points;
/// the boundary coordinates are left-point Ito sums. Drift is forced to
/// `mu = n/2`.
pub fn sample_real_bm(z0: &RealPoint, config: &SimConfig, stream_id: u64) -> Result<Trajectory<RealPoint>> {
    config.validate()?;
    let n_steps = config.n_steps();
    let mut s = RealStepper::new(z0, config, stream_id);
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

/// Terminal point only, identical to `sample_real_bm(...).terminal()` but
/// without storing the path.
pub fn sample_real_terminal(z0: &RealPoint, config: &SimConfig, stream_id: u64) -> Result<RealPoint> {
    config.validate()?;
    let mut s = RealStepper::new(z0, config, stream_id);
    for _ in 0..config.n_steps() {
        s.step();
    }
    Ok(s.point())
}

/// Terminal points for stream ids `0..n_samples`, in stream order.
pub fn sample_real_terminal_batch(z0: &RealPoint, config: &SimConfig) -> Result<Vec<RealPoint>> {
    config.validate()?;
    Ok(map_streams(config.n_samples, |sid| {
        sample_real_terminal(z0, config, sid).expect("config validated")
    }))
}

/// Hyperbolic Poisson kernel
/// `p_{n+1}(xi, y) = 2^{n-1} Gamma((n+1)/2) pi^{-(n+1)/2} y^n / (y^2+|xi|^2)^n`.
pub fn poisson_kernel_real(n: usize, xi: &[f64], y: f64) -> Result<f64> {
    if n == 0 || xi.len() != n {
        return Err(Error::Mismatch(format!("xi must have length n >= 1, got {} vs n={n}", xi.len())));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("height must be positive, got {y}")));
    }
    let nf = n as f64;
    let log_c = (nf - 1.0) * std::f64::consts::LN_2 + log_gamma((nf + 1.0) / 2.0)?
        - (nf + 1.0) / 2.0 * std::f64::consts::PI.ln();
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    Ok((log_c + nf * y.ln() - nf * (y * y + r2).ln()).exp())
}

/// Euclidean Poisson kernel of the hyperplane,
/// `q_{n+1}(xi, y) = Gamma((n+1)/2) pi^{-(n+1)/2} y / (y^2+|xi|^2)^{(n+1)/2}`.
pub fn poisson_kernel_euclid(n: usize, xi: &[f64], y: f64) -> Result<f64> {
    if n == 0 || xi.len() != n {
        return Err(Error::Mismatch(format!("xi must have length n >= 1, got {} vs n={n}", xi.len())));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("height must be positive, got {y}")));
    }
    let nf = n as f64;
    let log_c = log_gamma((nf + 1.0) / 2.0)? - (nf + 1.0) / 2.0 * std::f64::consts::PI.ln();
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    Ok((log_c + y.ln() - (nf + 1.0) / 2.0 * (y * y + r2).ln()).exp())
}

/// Closed-form Fourier transform of the hyperbolic Poisson kernel in the
/// two cases the limit law admits one:
/// n = 2: `y|lambda| K_1(y|lambda|)`; n = 3: `(y|lambda|+1) e^{-y|lambda|}`.
pub fn fourier_real(n: usize, lambda: &[f64], y: f64) -> Result<f64> {
    if lambda.len() != n {
        return Err(Error::Mismatch(format!(
            "lambda must have length n, got {} vs n={n}",
            lambda.len()
        )));
    }
    fourier_real_radial(n, lambda.iter().map(|v| v * v).sum::<f64>().sqrt(), y)
}

/// Same as [`fourier_real`] with the frequency given by its norm.
pub fn fourier_real_radial(n: usize, lambda_norm: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("height must be positive, got {y}")));
    }
    if lambda_norm < 0.0 {
        return Err(Error::Domain("frequency norm must be nonnegative".into()));
    }
    let z = y * lambda_norm;
    match n {
        2 => {
            if z < 1e-8 {
                // z K_1(z) -> 1; the quadrature loses accuracy this deep.
                Ok(1.0)
            } else {
                Ok(z * bessel_k(1.0, z, &QuadratureSpec::default())?)
            }
        }
        3 => Ok((z + 1.0) * (-z).exp()),
        _ => Err(Error::Domain(format!(
            "closed-form transform exists only for n in {{2, 3}}, got {n}"
        ))),
    }
}

/// Characteristic function of the boundary coordinate at the first hitting
/// time of the level `y = a`:
/// `E[exp(i <lambda, X(tau_a)>)] = e^{i<lambda,x>} phi_n(|lambda|; y) / phi_n(|lambda|; a)`.
///
/// Requires `a < y`: the height tends to 0, so downward levels are hit
/// almost surely, and the formula is used only there.
pub fn hitting_charfn(n: usize, lambda: &[f64], z0: &RealPoint, a: f64) -> Result<Complex64> {
    if z0.dim() != n || lambda.len() != n {
        return Err(Error::Mismatch(format!(
            "expected n={n}-dimensional point and frequency, got {} and {}",
            z0.dim(),
            lambda.len()
        )));
    }
    if !(a > 0.0 && a < z0.y) {
        return Err(Error::Domain(format!(
            "hitting level must satisfy 0 < a < y, got a={a}, y={}",
            z0.y
        )));
    }
    let norm = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ratio = fourier_real_radial(n, norm, z0.y)? / fourier_real_radial(n, norm, a)?;
    let phase: f64 = lambda.iter().zip(&z0.x).map(|(l, x)| l * x).sum();
    Ok(Complex64::from_polar(1.0, phase) * ratio)
}

/// Simulates the boundary coordinate at the first crossing of `y = a`.
/// The crossing step is refined by three Brownian-bridge bisections
/// (local step factor 8) before the hit is recorded.
pub fn sample_hitting_point(z0: &RealPoint, a: f64, config: &SimConfig, stream_id: u64) -> Result<Vec<f64>> {
    config.validate()?;
    if !(a > 0.0 && a < z0.y) {
        return Err(Error::Domain(format!(
            "hitting level must satisfy 0 < a < y, got a={a}, y={}",
            z0.y
        )));
    }
    let n = z0.dim();
    let dt = config.dt_eff();
    let mu = DriftParam::real_space(n).mu();
    let threshold = (a / z0.y).ln(); // hit when B(t) - mu t < threshold
    let mut streams = IncrementStreams::new(config.seed, stream_id, (n + 1) as u32, dt);
    let mut x = z0.x.clone();
    let mut b = 0.0f64;
    let mut t = 0.0f64;
    let mut dw = vec![0.0; n + 1];
    // Expected crossing time is |threshold|/mu; the cap only guards
    // against configuration mistakes.
    let max_steps = (((threshold.abs() / mu + 1.0) / dt).ceil() as u64).saturating_mul(10_000);
    let drifted = |b: f64, t: f64| b - mu * t;
    for _ in 0..max_steps {
        streams.next_all(&mut dw);
        let b_next = b + dw[0];
        if drifted(b_next, t + dt) >= threshold {
            // No crossing this step.
            let y = z0.y * drifted(b, t).exp();
            for (xj, dwj) in x.iter_mut().zip(dw.iter().skip(1)) {
                *xj += y * dwj;
            }
            b = b_next;
            t += dt;
            continue;
        }
        // Crossing step: bisect the increments three times with Brownian
        // bridges, then walk the fine sub-grid to the first sub-crossing.
        let mut incs: Vec<Vec<f64>> = vec![dw.clone()];
        let mut sub_dt = dt;
        for _ in 0..3 {
            sub_dt *= 0.5;
            let mut refined = Vec::with_capacity(incs.len() * 2);
            for inc in &incs {
                // Bridge midpoint: each half carries inc/2 plus an
                // antisymmetric N(0, sub_dt/2) component.
                let mut first = Vec::with_capacity(n + 1);
                let mut second = Vec::with_capacity(n + 1);
                for (c, &total) in inc.iter().enumerate() {
                    let noise = streams.bridge_noise(c, sub_dt);
                    first.push(0.5 * total + noise);
                    second.push(0.5 * total - noise);
                }
                refined.push(first);
                refined.push(second);
            }
            incs = refined;
        }
        for inc in &incs {
            let y = z0.y * drifted(b, t).exp();
            if y < a {
                return Ok(x);
            }
            for (xj, d) in x.iter_mut().zip(inc.iter().skip(1)) {
                *xj += y * d;
            }
            b += inc[0];
            t += sub_dt;
        }
        return Ok(x);
    }
    Err(Error::Config("hitting simulation exceeded its step guard".into()))
}

/// Euler-Maruyama sample of the radial SDE `dr = dbeta + (n/2) coth(r) dt`
/// at time `t`, using `config.dt` and halving the step locally (up to 40
/// levels) whenever a move would cross zero. The repelling drift makes the
/// exact process positive; a floor of 1e-12 absorbs roundoff.
pub fn sample_radial_sde(n: usize, r0: f64, t: f64, config: &SimConfig, stream_id: u64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let dt = config.dt_eff();
    let mut rng = substream(config.seed, stream_id, 0);
    let mut noise = move |h: f64| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * h.sqrt()
    };
    let steps = (t / dt).round().max(1.0) as u64;
    let h = t / steps as f64;
    let mut r = r0;
    for _ in 0..steps {
        r = radial_step(n as f64 / 2.0, r, h, 0, &mut noise);
    }
    Ok(r)
}

/// One (possibly recursively halved) Euler step of the radial SDE with
/// caller-supplied noise; exposed so tests can drive it deterministically.
pub fn radial_step(half_n: f64, r: f64, h: f64, depth: u32, noise: &mut impl FnMut(f64) -> f64) -> f64 {
    const FLOOR: f64 = 1e-12;
    let proposal = r + half_n / r.tanh() * h + noise(h);
    if proposal > FLOOR {
        return proposal;
    }
    if depth >= 40 {
        return FLOOR;
    }
    let mid = radial_step(half_n, r, h * 0.5, depth + 1, noise);
    radial_step(half_n, mid, h * 0.5, depth + 1, noise)
}

/// Exact draws from the kernel law: `xi = x + y * g / chi_n` with `g`
/// standard normal in R^n and `chi_n^2 ~ chi-squared(n)`; the marginal of
/// `xi` is exactly `p_{n+1}(. - x, y)`. For n = 1 this is the Cauchy law.
pub fn sample_poisson_kernel_real(
    z0: &RealPoint,
    count: usize,
    seed: u64,
    stream_id: u64,
) -> Vec<Vec<f64>> {
    let n = z0.dim();
    let mut rng = substream(seed, stream_id, 0xD0);
    let chi2 = Gamma::new(n as f64 / 2.0, 2.0).expect("valid shape");
    (0..count)
        .map(|_| {
            let s: f64 = chi2.sample(&mut rng);
            let scale = z0.y / s.sqrt();
            (0..n)
                .map(|j| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    z0.x[j] + scale * g
                })
                .collect()
        })
        .collect()
}

/// Numeric Fourier transform of the hyperbolic kernel `p_{n+1}(., y)` at
/// radial frequency `lambda`, for n in {1, 2, 3}. The lateral coordinates
/// integrate out in closed form; the remaining one-dimensional cosine
/// transform is evaluated by quadrature. Independent of [`fourier_real`],
/// which goes through the Bessel/exponential closed forms.
pub fn fourier_real_quadrature(n: usize, lambda: f64, y: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("height must be positive, got {y}")));
    }
    let slice = kernel_slice_marginal(n, y)?;
    if lambda == 0.0 {
        let half = integrate_semi_infinite(slice, spec)?;
        return Ok(2.0 * half);
    }
    cosine_transform(slice, lambda.abs(), spec)
}

// int p_{n+1}((u, v), y) dv over the last n-1 coordinates, closed form.
fn kernel_slice_marginal(n: usize, y: f64) -> Result<impl Fn(f64) -> f64> {
    let (c, power) = match n {
        1 => (y / std::f64::consts::PI, 1.0),
        2 => (0.5 * y * y, 1.5),
        3 => (2.0 * y.powi(3) / std::f64::consts::PI, 2.0),
        _ => {
            return Err(Error::Domain(format!(
                "slice marginal implemented for n in {{1,2,3}}, got {n}"
            )))
        }
    };
    let y2 = y * y;
    Ok(move |u: f64| c / (y2 + u * u).powf(power))
}

/// Quadrature value of `int p_{n+1}(xi, y) dxi` via the radial reduction;
/// equals 1 for every n and y.
pub fn kernel_normalization_real(n: usize, y: f64, spec: &QuadratureSpec) -> Result<f64> {
    use std::f64::consts::PI;
    match n {
        1 => {
            let v = integrate_semi_infinite(move |r| poisson_kernel_real(1, &[r], y).unwrap_or(0.0), spec)?;
            Ok(2.0 * v)
        }
        2 => {
            let v =
                integrate_semi_infinite(move |r| r * poisson_kernel_real(2, &[r, 0.0], y).unwrap_or(0.0), spec)?;
            Ok(2.0 * PI * v)
        }
        3 => {
            let v = integrate_semi_infinite(
                move |r| r * r * poisson_kernel_real(3, &[r, 0.0, 0.0], y).unwrap_or(0.0),
                spec,
            )?;
            Ok(4.0 * PI * v)
        }
        _ => Err(Error::Domain(format!(
            "normalization reduction implemented for n in {{1,2,3}}, got {n}"
        ))),
    }
}
