//! Perpetual integrals of geometric Brownian motion: Dufresne's identity,
//! the densities of the two perpetual integrals, the conditional and joint
//! Laplace transforms built on the Whittaker function, and the
//! first-hitting Laplace transform of the upward-drifting process —
//! each paired with a Monte Carlo route over truncated paths.

use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::DriftParam;
use crate::error::{Error, Result};
use crate::parallel::map_streams;
use crate::rng::substream;
use crate::special::{log_gamma, whittaker_w_ln};
use crate::QuadratureSpec;

/// Truncated perpetual integrals of one driving path, all three taken at
/// a horizon with `mu T >= 15` so the neglected tails are O(1e-13)
/// relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerpetualSample {
    /// `int_0^T exp(B^(-mu)_s) ds`
    pub a_small: f64,
    /// `int_0^T exp(2 B^(-mu)_s) ds`
    pub a_big: f64,
    /// `int_0^T exp(4 B^(-mu)_s) ds`
    pub a_tilde: f64,
}

/// Trapezoid-rule perpetual samples over `count` independent paths with
/// step `dt`, truncated at `max(15/mu, horizon_floor)`.
pub fn sample_perpetual_batch(
    mu: DriftParam,
    dt: f64,
    count: u64,
    seed: u64,
    horizon_floor: f64,
) -> Result<Vec<PerpetualSample>> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let horizon = mu.truncation_horizon().max(horizon_floor);
    let n_steps = (horizon / dt).round().max(1.0) as usize;
    if n_steps as f64 > crate::config::MAX_GRID_STEPS {
        return Err(Error::Config("horizon/dt exceeds the grid guard".into()));
    }
    let h = horizon / n_steps as f64;
    let mu = mu.mu();
    Ok(map_streams(count, move |sid| {
        let mut rng = substream(seed, sid, 0);
        let sqrt_h = h.sqrt();
        let mut b = 0.0f64;
        let mut acc = [0.0f64; 3];
        let mut prev = [1.0f64; 3];
        for i in 1..=n_steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            b += z * sqrt_h;
            let drifted = b - mu * (i as f64) * h;
            let e1 = drifted.exp();
            let e2 = (2.0 * drifted).exp();
            let e4 = (4.0 * drifted).exp();
            acc[0] += 0.5 * (prev[0] + e1) * h;
            acc[1] += 0.5 * (prev[1] + e2) * h;
            acc[2] += 0.5 * (prev[2] + e4) * h;
            prev = [e1, e2, e4];
        }
        PerpetualSample { a_small: acc[0], a_big: acc[1], a_tilde: acc[2] }
    }))
}

/// Exact samples of the law of the perpetual integral `A_inf`, namely
/// `1/(2 gamma_mu)` for a Gamma(mu) variable — the analytic side of
/// Dufresne's identity.
pub fn sample_dufresne(mu: DriftParam, count: u64, seed: u64, stream_id: u64) -> Vec<f64> {
    let gamma = Gamma::new(mu.mu(), 1.0).expect("mu > 0");
    let mut rng = substream(seed, stream_id, 0xA0);
    (0..count).map(|_| 1.0 / (2.0 * gamma.sample(&mut rng))).collect()
}

/// Density of `a_inf`: `f_1(v) = 2^{2mu}/Gamma(2mu) v^{-(2mu+1)} e^{-2/v}`.
pub fn density_f1(mu: DriftParam, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("density argument must be positive, got {v}")));
    }
    let mu = mu.mu();
    let log_val = 2.0 * mu * std::f64::consts::LN_2 - log_gamma(2.0 * mu)?
        - (2.0 * mu + 1.0) * v.ln()
        - 2.0 / v;
    Ok(log_val.exp())
}

/// Density of `A_inf = 1/(2 gamma_mu)`:
/// `f_2(v) = v^{-(mu+1)} e^{-1/(2v)} / (2^mu Gamma(mu))`.
pub fn density_f2(mu: DriftParam, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("density argument must be positive, got {v}")));
    }
    let mu = mu.mu();
    let log_val = -(mu + 1.0) * v.ln() - 1.0 / (2.0 * v) - mu * std::f64::consts::LN_2 - log_gamma(mu)?;
    Ok(log_val.exp())
}

// log(sinh x) without overflow for large x.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(2.0 * x)).exp().ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Conditional-transform density object
/// `E[exp(-lambda^2 A_inf / 2) | a_inf = v] f_1(v)
///  = (1/(2 Gamma(2mu))) (lambda/sinh(lambda v/2))^{2mu+1}
///    exp(-lambda coth(lambda v/2))`.
pub fn cond_laplace_given_a(mu: DriftParam, lambda: f64, v: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(v > 0.0) {
        return Err(Error::Domain(format!("lambda and v must be positive, got {lambda}, {v}")));
    }
    let mu = mu.mu();
    let x = lambda * v / 2.0;
    let log_val = -std::f64::consts::LN_2 - log_gamma(2.0 * mu)?
        + (2.0 * mu + 1.0) * (lambda.ln() - ln_sinh(x))
        - lambda / x.tanh();
    Ok(log_val.exp())
}

/// Conditional-transform density object for the quartic integral,
/// `E[exp(-lambda^2 A~_inf / 2) | A_inf = v] f_2(v)
///  = (1/(2^mu Gamma(mu))) (lambda/sinh(lambda v))^{mu+1}
///    exp(-(lambda/2) coth(lambda v))`.
pub fn cond_laplace_tilde(mu: DriftParam, lambda: f64, v: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(v > 0.0) {
        return Err(Error::Domain(format!("lambda and v must be positive, got {lambda}, {v}")));
    }
    let mu = mu.mu();
    let x = lambda * v;
    let log_val = -mu * std::f64::consts::LN_2 - log_gamma(mu)?
        + (mu + 1.0) * (lambda.ln() - ln_sinh(x))
        - lambda / (2.0 * x.tanh());
    Ok(log_val.exp())
}

/// Joint Laplace transform
/// `E[exp(-lambda^2 A_inf/2 + lambda kappa a_inf)]
///  = Gamma(mu-kappa+1/2)/Gamma(2mu) (2 lambda)^{mu-1/2}
///    W_{kappa,mu}(2 lambda)`.
pub fn joint_laplace(mu: DriftParam, lambda: f64, kappa: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let mu = mu.mu();
    if !(mu - kappa + 0.5 > 0.0) {
        return Err(Error::Domain(format!(
            "requires mu - kappa + 1/2 > 0, got {}",
            mu - kappa + 0.5
        )));
    }
    let log_val = log_gamma(mu - kappa + 0.5)? - log_gamma(2.0 * mu)?
        + (mu - 0.5) * (2.0 * lambda).ln()
        + whittaker_w_ln(kappa, mu, 2.0 * lambda, spec)?;
    Ok(log_val.exp())
}

/// First-hitting Laplace transform of the upward-drifting geometric
/// Brownian motion `X(s) = x exp(B_s + mu s)` at the level `z >= x`:
/// `v_z(x) = (z/x)^{mu-1/2} W_{kappa,mu}(2 lambda/x) / W_{kappa,mu}(2 lambda/z)`,
/// which equals `E[exp(-lambda^2/2 int_0^tau X^-2 + lambda kappa int_0^tau X^-1)]`.
pub fn hitting_laplace_vz(
    mu: DriftParam,
    lambda: f64,
    kappa: f64,
    x: f64,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(x > 0.0) || x > z {
        return Err(Error::Domain(format!("requires 0 < x <= z, got x={x}, z={z}")));
    }
    if x == z {
        return Ok(1.0);
    }
    let mu = mu.mu();
    let log_val = (mu - 0.5) * (z.ln() - x.ln()) + whittaker_w_ln(kappa, mu, 2.0 * lambda / x, spec)?
        - whittaker_w_ln(kappa, mu, 2.0 * lambda / z, spec)?;
    Ok(log_val.exp())
}

/// One Monte Carlo draw of `exp(-lambda^2/2 int_0^tau X^-2 + lambda kappa
/// int_0^tau X^-1)` for the upward-drifting process run to its first
/// crossing of `z`; the oracle side of [`hitting_laplace_vz`].
pub fn sample_hitting_functional(
    mu: DriftParam,
    lambda: f64,
    kappa: f64,
    x: f64,
    z: f64,
    dt: f64,
    seed: u64,
    stream_id: u64,
) -> Result<f64> {
    if !(x > 0.0) || !(z > x) {
        return Err(Error::Domain(format!("requires 0 < x < z, got x={x}, z={z}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let mu = mu.mu();
    let target = (z / x).ln();
    let mut rng = substream(seed, stream_id, 0xA1);
    let sqrt_dt = dt.sqrt();
    let mut log_rel = 0.0f64; // log(X/x)
    let mut i1 = 0.0f64;
    let mut i2 = 0.0f64;
    let max_steps = ((target / mu + 1.0) / dt * 1e4).ceil() as u64;
    for _ in 0..max_steps {
        let inv = (-log_rel).exp() / x; // X^{-1} at the left endpoint
        i1 += inv * dt;
        i2 += inv * inv * dt;
        let g: f64 = StandardNormal.sample(&mut rng);
        log_rel += g * sqrt_dt + mu * dt;
        if log_rel >= target {
            return Ok((-0.5 * lambda * lambda * i2 + lambda * kappa * i1).exp());
        }
    }
    Err(Error::Config("hitting simulation exceeded its step guard".into()))
}
