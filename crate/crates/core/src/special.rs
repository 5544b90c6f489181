//! Log-gamma, the modified Bessel function K_nu and the Whittaker
//! function W_{kappa,mu}, each evaluated from its defining integral
//! representation through the adaptive quadrature engine.

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_semi_infinite_from, QuadratureSpec};

const SQRT_2PI: f64 = 2.506628274631000502415765284811;
const LN_SQRT_PI: f64 = 0.57236494292470008707171367567653;

// Lanczos g = 7, 9 terms.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Natural log of the Gamma function for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        // Recurrence keeps the Lanczos sum in its accurate range.
        return Ok(log_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let w = z + 7.5;
    Ok(SQRT_2PI.ln() + (z + 0.5) * w.ln() - w + acc.ln())
}

/// Modified Bessel function K_nu(z) for nu > 0, z > 0, via
/// `K_nu(z) = sqrt(pi)/Gamma(nu+1/2) (z/2)^nu int_1^inf e^{-zt}(t^2-1)^{nu-1/2} dt`
/// after the substitution `t = 1 + u^2` that removes the endpoint
/// singularity.
pub fn bessel_k(nu: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(bessel_k_ln(nu, z, spec)?.exp())
}

pub fn bessel_k_ln(nu: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("bessel_k requires nu > 0, got {nu}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("bessel_k requires z > 0, got {z}")));
    }
    let integral = integrate_semi_infinite_from(
        |u| {
            let u2 = u * u;
            (-z * u2).exp() * u2.powf(nu) * (u2 + 2.0).powf(nu - 0.5)
        },
        0.0,
        spec,
    )?;
    Ok(LN_SQRT_PI - log_gamma(nu + 0.5)? + nu * (z / 2.0).ln() - z + (2.0 * integral).ln())
}

/// Whittaker function W_{kappa,mu}(z) for z > 0 in the parameter range
/// `mu - kappa + 1/2 > 0` where the integral representation
/// `W = e^{-z/2} z^{mu+1/2}/Gamma(mu-kappa+1/2) int_0^inf e^{-zt}
///  t^{mu-kappa-1/2} (1+t)^{mu+kappa-1/2} dt`
/// is valid.
pub fn whittaker_w(kappa: f64, mu: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(whittaker_w_ln(kappa, mu, z, spec)?.exp())
}

pub fn whittaker_w_ln(kappa: f64, mu: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("whittaker_w requires mu > 0, got {mu}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("whittaker_w requires z > 0, got {z}")));
    }
    let alpha = mu - kappa - 0.5;
    let beta = mu + kappa - 0.5;
    if !(alpha + 1.0 > 0.0) {
        return Err(Error::Domain(format!(
            "integral representation needs mu - kappa + 1/2 > 0, got {}",
            alpha + 1.0
        )));
    }

    // Head piece on [0, 1]: a power substitution t = u^p with
    // p = 1/(1+alpha) turns the t^alpha weight into the constant 1/p.
    let head = if alpha >= 0.0 {
        integrate(|t| (-z * t).exp() * t.powf(alpha) * (1.0 + t).powf(beta), 0.0, 1.0, spec)?
    } else {
        let p = 1.0 / (1.0 + alpha);
        p * integrate(
            |u| {
                let t = u.powf(p);
                (-z * t).exp() * (1.0 + t).powf(beta)
            },
            0.0,
            1.0,
            spec,
        )?
    };
    let tail = integrate_semi_infinite_from(|t| (-z * t).exp() * t.powf(alpha) * (1.0 + t).powf(beta), 1.0, spec)?;
    Ok(-z / 2.0 + (mu + 0.5) * z.ln() - log_gamma(alpha + 1.0)? + (head + tail).ln())
}
