//! The quaternionic hyperbolic space H_q^n: distance, full solution-system
//! sampler, the skew-symmetric frequency block with its orthogonal
//! reduction, the Poisson kernel and the Fourier transform of the limit
//! law.

use num_complex::Complex64;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::{DriftParam, SimConfig};
use crate::error::{Error, Result};
use crate::parallel::map_streams;
use crate::quad::{integrate_semi_infinite_from, QuadratureSpec};
use crate::rng::{substream, IncrementStreams};
use crate::special::log_gamma;
use crate::Trajectory;

/// A point of H_q^n, n >= 2. The special coordinates are (x1, y) with
/// y > 0 plus (x_{n+1}, y_{n+1}); the remaining ones are grouped per
/// k = 2..=n as theta_k = (x_k, y_k, x_{n+k}, y_{n+k}).
#[derive(Debug, Clone, PartialEq)]
pub struct QuatPoint {
    pub x1: f64,
    pub y: f64,
    pub xn1: f64,
    pub yn1: f64,
    pub tilde: Vec<f64>,
}

impl QuatPoint {
    pub fn new(x1: f64, y: f64, xn1: f64, yn1: f64, tilde: Vec<f64>) -> Result<Self> {
        if tilde.is_empty() || tilde.len() % 4 != 0 {
            return Err(Error::Domain(format!(
                "tilde must hold 4(n-1) coordinates with n >= 2, got length {}",
                tilde.len()
            )));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("height must be positive, got {y}")));
        }
        Ok(QuatPoint { x1, y, xn1, yn1, tilde })
    }

    pub fn n(&self) -> usize {
        self.tilde.len() / 4 + 1
    }

    /// theta_k for k = 2..=n.
    pub fn theta(&self, k: usize) -> [f64; 4] {
        let i = 4 * (k - 2);
        [self.tilde[i], self.tilde[i + 1], self.tilde[i + 2], self.tilde[i + 3]]
    }

    /// Flat coordinates (x1, x_{n+1}, y_{n+1}, theta_2, ..., theta_n) of
    /// the boundary block, matching [`QuatFreq::flat`].
    pub fn boundary_coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + self.tilde.len());
        v.push(self.x1);
        v.push(self.xn1);
        v.push(self.yn1);
        v.extend_from_slice(&self.tilde);
        v
    }
}

/// Frequency of the joint law: xi in R^3 against (x1, x_{n+1}, y_{n+1}),
/// and one 4-vector w_k = (u_k, v_k, u_{n+k}, v_{n+k}) per theta block.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatFreq {
    pub xi: [f64; 3],
    pub w: Vec<[f64; 4]>,
}

impl QuatFreq {
    pub fn new(xi: [f64; 3], w: Vec<[f64; 4]>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Mismatch("w must hold n-1 >= 1 blocks".into()));
        }
        Ok(QuatFreq { xi, w })
    }

    pub fn xi_norm(&self) -> f64 {
        (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1] + self.xi[2] * self.xi[2]).sqrt()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + 4 * self.w.len());
        v.extend_from_slice(&self.xi);
        for wk in &self.w {
            v.extend_from_slice(wk);
        }
        v
    }
}

pub type Mat4 = [[f64; 4]; 4];

/// The skew-symmetric frequency matrix, its orthogonal reduction Q and the
/// standard block form K with `Q^t Xi Q = K`.
#[derive(Debug, Clone)]
pub struct SkewBlock {
    pub xi_mat: Mat4,
    pub q: Mat4,
    pub k: Mat4,
    pub xi_norm: f64,
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = (0..4).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

fn mat_transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

pub fn mat_vec(a: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, row) in a.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(m, x)| m * x).sum();
    }
    out
}

fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

/// Xi exactly as displayed in the solution system.
pub fn xi_matrix(xi: &[f64; 3]) -> Mat4 {
    let [x1, x2, x3] = *xi;
    [
        [0.0, x1, -x2, -x3],
        [-x1, 0.0, -x3, x2],
        [x2, x3, 0.0, x1],
        [x3, -x2, -x1, 0.0],
    ]
}

const SKEW_TOL: f64 = 1e-12;

/// Builds the frequency block and validates all of its invariants:
/// Xi antisymmetric, Q orthogonal, Q^t Xi Q = K, K in standard form.
///
/// The closed-form Q needs `xi_2^2 + xi_3^2 > 0`; on the axis
/// `xi = (x, 0, 0)` an explicit orthonormal frame built from
/// `q2 = Xi q1/|xi|`, `q4 = Xi q3/|xi|` is used instead (Xi^2 = -|xi|^2 I
/// makes that construction exact).
pub fn build_skew_block(xi: &[f64; 3]) -> Result<SkewBlock> {
    let norm2 = xi.iter().map(|v| v * v).sum::<f64>();
    let norm = norm2.sqrt();
    if !(norm > 0.0) {
        return Err(Error::Domain("xi must be nonzero".into()));
    }
    let xi_mat = xi_matrix(xi);
    let k = [
        [0.0, -norm, 0.0, 0.0],
        [norm, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -norm],
        [0.0, 0.0, norm, 0.0],
    ];

    let s2 = xi[1] * xi[1] + xi[2] * xi[2];
    let q = if s2 > 1e-24 * norm2 {
        let s = s2.sqrt();
        let [x1, x2, x3] = *xi;
        [
            [0.0, x1 / norm, s / norm, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, x3 / norm, -x1 * x3 / (s * norm), x2 / s],
            [0.0, -x2 / norm, x1 * x2 / (s * norm), x3 / s],
        ]
    } else {
        axis_frame(&xi_mat, norm)
    };

    let block = SkewBlock { xi_mat, q, k, xi_norm: norm };
    match block.validate() {
        Ok(()) => Ok(block),
        Err(_) => {
            // Printed form failed validation (should not happen); fall back
            // to the constructive frame and re-validate.
            let q = axis_frame(&xi_mat, norm);
            let block = SkewBlock { xi_mat, q, k, xi_norm: norm };
            block.validate()?;
            Ok(block)
        }
    }
}

// Columns (q1, Xi q1/|xi|, q3, Xi q3/|xi|) with q1 = e1 and q3 any unit
// vector orthogonal to the first two; orthonormality follows from
// antisymmetry and Xi^2 = -|xi|^2 I.
fn axis_frame(xi_mat: &Mat4, norm: f64) -> Mat4 {
    let q1 = [1.0, 0.0, 0.0, 0.0];
    let xq1 = mat_vec(xi_mat, &q1);
    let q2 = [xq1[0] / norm, xq1[1] / norm, xq1[2] / norm, xq1[3] / norm];
    // Pick the coordinate axis least aligned with span(q1, q2) and project.
    let mut q3 = [0.0; 4];
    let mut best = f64::INFINITY;
    for axis in 0..4 {
        let mut e = [0.0; 4];
        e[axis] = 1.0;
        let a1: f64 = e.iter().zip(&q1).map(|(u, v)| u * v).sum();
        let a2: f64 = e.iter().zip(&q2).map(|(u, v)| u * v).sum();
        let align = a1 * a1 + a2 * a2;
        if align < best {
            best = align;
            q3 = e;
        }
    }
    let a1: f64 = q3.iter().zip(&q1).map(|(u, v)| u * v).sum();
    let a2: f64 = q3.iter().zip(&q2).map(|(u, v)| u * v).sum();
    for i in 0..4 {
        q3[i] -= a1 * q1[i] + a2 * q2[i];
    }
    let len = q3.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut q3 {
        *v /= len;
    }
    let xq3 = mat_vec(xi_mat, &q3);
    let q4 = [xq3[0] / norm, xq3[1] / norm, xq3[2] / norm, xq3[3] / norm];
    let mut q = [[0.0; 4]; 4];
    for i in 0..4 {
        q[i][0] = q1[i];
        q[i][1] = q2[i];
        q[i][2] = q3[i];
        q[i][3] = q4[i];
    }
    q
}

impl SkewBlock {
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                if (self.xi_mat[i][j] + self.xi_mat[j][i]).abs() > SKEW_TOL {
                    return Err(Error::Domain("Xi is not antisymmetric".into()));
                }
            }
        }
        let qt = mat_transpose(&self.q);
        let qtq = mat_mul(&qt, &self.q);
        let mut eye = [[0.0; 4]; 4];
        for (i, row) in eye.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        if max_abs_diff(&qtq, &eye) > SKEW_TOL {
            return Err(Error::Domain("Q is not orthogonal".into()));
        }
        let reduced = mat_mul(&qt, &mat_mul(&self.xi_mat, &self.q));
        if max_abs_diff(&reduced, &self.k) > SKEW_TOL * self.xi_norm.max(1.0) {
            return Err(Error::Domain("Q^t Xi Q does not reduce to K".into()));
        }
        Ok(())
    }

    /// `sum_k |Xi theta_k + w_k|^2`, the quadratic form entering the limit
    /// characteristic function. Orthogonal invariance makes this equal to
    /// `sum_k |K theta^_k + w^_k|^2` in the hatted frame.
    pub fn f_form(&self, thetas: &[[f64; 4]], ws: &[[f64; 4]]) -> f64 {
        thetas
            .iter()
            .zip(ws)
            .map(|(th, w)| {
                let v = mat_vec(&self.xi_mat, th);
                (0..4).map(|i| (v[i] + w[i]) * (v[i] + w[i])).sum::<f64>()
            })
            .sum()
    }

    /// The same form computed through the hatted frame, for cross-checks.
    pub fn f_form_hatted(&self, thetas: &[[f64; 4]], ws: &[[f64; 4]]) -> f64 {
        let qt = mat_transpose(&self.q);
        thetas
            .iter()
            .zip(ws)
            .map(|(th, w)| {
                let th_h = mat_vec(&qt, th);
                let w_h = mat_vec(&qt, w);
                let kth = mat_vec(&self.k, &th_h);
                (0..4).map(|i| (kth[i] + w_h[i]) * (kth[i] + w_h[i])).sum::<f64>()
            })
            .sum()
    }
}

/// Phi and the three phi's of the distance and kernel formulas, between
/// the base point `z` and the boundary data of a second point (the second
/// height never enters).
fn phi_quat(z: &QuatPoint, x1p: f64, xn1p: f64, yn1p: f64, tilde_p: &[f64]) -> (f64, [f64; 3]) {
    let n1 = z.tilde.len() / 4;
    let mut big_phi = z.y * z.y;
    let mut p1 = x1p - z.x1;
    let mut p2 = xn1p - z.xn1;
    let mut p3 = yn1p - z.yn1;
    for k in 0..n1 {
        let i = 4 * k;
        let (xk, yk, xnk, ynk) = (z.tilde[i], z.tilde[i + 1], z.tilde[i + 2], z.tilde[i + 3]);
        let (xkp, ykp, xnkp, ynkp) = (tilde_p[i], tilde_p[i + 1], tilde_p[i + 2], tilde_p[i + 3]);
        big_phi += (xkp - xk) * (xkp - xk)
            + (ykp - yk) * (ykp - yk)
            + (xnkp - xnk) * (xnkp - xnk)
            + (ynkp - ynk) * (ynkp - ynk);
        p1 += (ykp * xk - xkp * yk) + (ynkp * xnk - xnkp * ynk);
        p2 += (xkp * xnk - xnkp * xk) + (ynkp * yk - ykp * ynk);
        p3 += (xkp * ynk - ynkp * xk) + (ykp * xnk - xnkp * yk);
    }
    (big_phi, [p1, p2, p3])
}

/// Distance from
/// `cosh^2 d = ((y'^2 + Phi)^2 + 4(phi_1^2+phi_2^2+phi_3^2)) / (4 y^2 y'^2)`.
pub fn dist_quat(z: &QuatPoint, z2: &QuatPoint) -> Result<f64> {
    if z.n() != z2.n() {
        return Err(Error::Mismatch(format!("dimensions {} vs {}", z.n(), z2.n())));
    }
    let (big_phi, phis) = phi_quat(z, z2.x1, z2.xn1, z2.yn1, &z2.tilde);
    let phi2 = phis.iter().map(|v| v * v).sum::<f64>();
    let num = (z2.y * z2.y + big_phi).powi(2) + 4.0 * phi2;
    let cosh2 = num / (4.0 * z.y * z.y * z2.y * z2.y);
    Ok(cosh2.max(1.0).sqrt().acosh())
}

struct QuatStepper {
    streams: IncrementStreams,
    mu: f64,
    dt: f64,
    y0: f64,
    b: f64,
    t: f64,
    x1: f64,
    xn1: f64,
    yn1: f64,
    tilde: Vec<f64>,
    dw: Vec<f64>,
}

impl QuatStepper {
    // Component layout: 0 = B (height), 1..=3 = B_1, B_2, B_3 (the three
    // Y^2-driven coordinates), then per k the quadruple
    // (w_{k,1}, w_{k,2}, w_{n+k,1}, w_{n+k,2}).
    fn new(z0: &QuatPoint, config: &SimConfig, stream_id: u64) -> Self {
        let n = z0.n();
        let dt = config.dt_eff();
        QuatStepper {
            streams: IncrementStreams::new(config.seed, stream_id, (4 * n) as u32, dt),
            mu: DriftParam::quat_space(n).mu(),
            dt,
            y0: z0.y,
            b: 0.0,
            t: 0.0,
            x1: z0.x1,
            xn1: z0.xn1,
            yn1: z0.yn1,
            tilde: z0.tilde.clone(),
            dw: vec![0.0; 4 * n],
        }
    }

    fn y(&self) -> f64 {
        self.y0 * (self.b - self.mu * self.t).exp()
    }

    fn step(&mut self) {
        let y = self.y();
        let y2 = y * y;
        self.streams.next_all(&mut self.dw);
        let mut dx1 = y2 * self.dw[1];
        let mut dxn1 = y2 * self.dw[2];
        let mut dyn1 = y2 * self.dw[3];
        for k in 0..self.tilde.len() / 4 {
            let i = 4 * k;
            let (xk, yk, xnk, ynk) =
                (self.tilde[i], self.tilde[i + 1], self.tilde[i + 2], self.tilde[i + 3]);
            let dxk = y * self.dw[4 + i];
            let dyk = y * self.dw[5 + i];
            let dxnk = y * self.dw[6 + i];
            let dynk = y * self.dw[7 + i];
            dx1 += yk * dxk - xk * dyk + ynk * dxnk - xnk * dynk;
            dxn1 += -xnk * dxk + xk * dxnk + ynk * dyk - yk * dynk;
            dyn1 += -ynk * dxk + xk * dynk - xnk * dyk + yk * dxnk;
            self.tilde[i] = xk + dxk;
            self.tilde[i + 1] = yk + dyk;
            self.tilde[i + 2] = xnk + dxnk;
            self.tilde[i + 3] = ynk + dynk;
        }
        self.x1 += dx1;
        self.xn1 += dxn1;
        self.yn1 += dyn1;
        self.b += self.dw[0];
        self.t += self.dt;
    }

    fn point(&self) -> QuatPoint {
        QuatPoint {
            x1: self.x1,
            y: self.y(),
            xn1: self.xn1,
            yn1: self.yn1,
            tilde: self.tilde.clone(),
        }
    }
}

/// Grid trajectory of the Brownian motion on H_q^n started at `z0`;
/// drift forced to `mu = 2n+1`.
pub fn sample_quat_bm(z0: &QuatPoint, config: &SimConfig, stream_id: u64) -> Result<Trajectory<QuatPoint>> {
    config.validate()?;
    let n_steps = config.n_steps();
    let mut s = QuatStepper::new(z0, config, stream_id);
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
pub fn sample_quat_terminal(z0: &QuatPoint, config: &SimConfig, stream_id: u64) -> Result<QuatPoint> {
    config.validate()?;
    let mut s = QuatStepper::new(z0, config, stream_id);
    for _ in 0..config.n_steps() {
        s.step();
    }
    Ok(s.point())
}

/// Terminal points for stream ids `0..n_samples`.
pub fn sample_quat_terminal_batch(z0: &QuatPoint, config: &SimConfig) -> Result<Vec<QuatPoint>> {
    config.validate()?;
    Ok(map_streams(config.n_samples, |sid| {
        sample_quat_terminal(z0, config, sid).expect("config validated")
    }))
}

/// Quaternionic Poisson kernel
/// `f_n = 2^{4n+1} Gamma(2n) pi^{-2n} y^{2(2n+1)} /
///  (Phi^2 + 4(phi_1^2+phi_2^2+phi_3^2))^{2n+1}`.
pub fn poisson_kernel_quat(
    n: usize,
    boundary: (f64, f64, f64, &[f64]),
    z0: &QuatPoint,
) -> Result<f64> {
    if z0.n() != n || n < 2 {
        return Err(Error::Mismatch(format!("point dimension {} vs n={n} (n >= 2)", z0.n())));
    }
    let (x1p, xn1p, yn1p, tilde_p) = boundary;
    if tilde_p.len() != 4 * (n - 1) {
        return Err(Error::Mismatch(format!(
            "boundary tilde must have length 4(n-1), got {}",
            tilde_p.len()
        )));
    }
    let nf = n as f64;
    let (big_phi, phis) = phi_quat(z0, x1p, xn1p, yn1p, tilde_p);
    let phi2 = phis.iter().map(|v| v * v).sum::<f64>();
    let log_c = (4.0 * nf + 1.0) * std::f64::consts::LN_2 + log_gamma(2.0 * nf)?
        - 2.0 * nf * std::f64::consts::PI.ln();
    let denom = big_phi * big_phi + 4.0 * phi2;
    Ok((log_c + 2.0 * (2.0 * nf + 1.0) * z0.y.ln() - (2.0 * nf + 1.0) * denom.ln()).exp())
}

/// Kernel value at flat boundary coordinates `(x1', x_{n+1}', y_{n+1}',
/// tilde')` for a base point at the boundary origin with height `y`.
pub fn poisson_kernel_quat_eval(n: usize, coords: &[f64], y: f64) -> Result<f64> {
    if coords.len() != 4 * n - 1 {
        return Err(Error::Mismatch(format!(
            "expected 4n-1 = {} boundary coordinates, got {}",
            4 * n - 1,
            coords.len()
        )));
    }
    let z0 = QuatPoint::new(0.0, y, 0.0, 0.0, vec![0.0; 4 * (n - 1)])?;
    poisson_kernel_quat(n, (coords[0], coords[1], coords[2], &coords[3..]), &z0)
}

/// Fourier transform of the limit law of `(X_1, X_{n+1}, Y_{n+1}, Z~)`.
///
/// In the rescaled cotangent variable it reads, for any xi != 0,
///
/// `e^{i psi} y^{2(2n+1)} / (2^{2n+1} Gamma(2n+1)) int_{|xi|}^inf
///  (kappa^2-|xi|^2)^{2n-1} kappa^{-2(n-1)}
///  exp(-y^2 kappa/2 - F/(2 kappa)) d kappa`,
///
/// with `psi = xi.(x1, x_{n+1}, y_{n+1}) + sum <w_k, theta_k>` and
/// `F = sum |Xi theta_k + w_k|^2`. Frequencies with |xi| below 1e-8 are
/// interpolated linearly between evaluations at xi = ±1e-6 along the
/// first axis.
pub fn limit_charfn_quat(
    n: usize,
    freq: &QuatFreq,
    z0: &QuatPoint,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if z0.n() != n || freq.w.len() != n - 1 {
        return Err(Error::Mismatch(format!(
            "expected n={n}: point has n={}, frequency has n={}",
            z0.n(),
            freq.w.len() + 1
        )));
    }
    if freq.xi_norm() < 1e-8 {
        let h = 1e-6;
        let shifted = |s: f64| QuatFreq { xi: [freq.xi[0] + s, freq.xi[1], freq.xi[2]], w: freq.w.clone() };
        let lo = limit_charfn_quat_at(n, &shifted(-h), z0, spec)?;
        let hi = limit_charfn_quat_at(n, &shifted(h), z0, spec)?;
        let w = (freq.xi[0] + h) / (2.0 * h);
        return Ok(lo * (1.0 - w) + hi * w);
    }
    limit_charfn_quat_at(n, freq, z0, spec)
}

fn limit_charfn_quat_at(
    n: usize,
    freq: &QuatFreq,
    z0: &QuatPoint,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let nf = n as f64;
    let norm = freq.xi_norm();
    let block = build_skew_block(&freq.xi)?;
    let thetas: Vec<[f64; 4]> = (2..=n).map(|k| z0.theta(k)).collect();
    let f_form = block.f_form(&thetas, &freq.w);
    let mut psi = freq.xi[0] * z0.x1 + freq.xi[1] * z0.xn1 + freq.xi[2] * z0.yn1;
    for (wk, th) in freq.w.iter().zip(&thetas) {
        psi += wk.iter().zip(th).map(|(a, b)| a * b).sum::<f64>();
    }
    let y2 = z0.y * z0.y;
    let integral = integrate_semi_infinite_from(
        move |kappa| {
            let band = (kappa * kappa - norm * norm).max(0.0);
            if band == 0.0 {
                return 0.0;
            }
            let log_val = (2.0 * nf - 1.0) * band.ln() - 2.0 * (nf - 1.0) * kappa.ln()
                - y2 * kappa / 2.0
                - if f_form > 0.0 { f_form / (2.0 * kappa) } else { 0.0 };
            log_val.exp()
        },
        norm,
        spec,
    )?;
    let log_pref =
        (2.0 * nf + 1.0) * y2.ln() - (2.0 * nf + 1.0) * std::f64::consts::LN_2 - log_gamma(2.0 * nf + 1.0)?;
    Ok(Complex64::from_polar(1.0, psi) * (log_pref.exp() * integral))
}

/// Exact draws from the quaternionic kernel law: the theta blocks are
/// `theta + y v` with `v` a 4(n-1)-dimensional Gamma(2n+1, 2) normal
/// mixture; given them, the phi vector is `(Phi/2) w` with `w` a
/// 3-dimensional chi(4n-1)-scaled normal, and the three special
/// coordinates are solved from the phi definitions.
pub fn sample_poisson_kernel_quat(z0: &QuatPoint, count: usize, seed: u64, stream_id: u64) -> Vec<QuatPoint> {
    let n = z0.n();
    let mut rng = substream(seed, stream_id, 0xD2);
    let tilde_mix = Gamma::new(2.0 * n as f64 + 1.0, 2.0).expect("valid shape");
    let phi_mix = Gamma::new(2.0 * n as f64 - 0.5, 2.0).expect("valid shape");
    (0..count)
        .map(|_| {
            let s: f64 = tilde_mix.sample(&mut rng);
            let scale = z0.y / s.sqrt();
            let mut tilde_p = Vec::with_capacity(4 * (n - 1));
            let mut v2 = 0.0;
            for base in &z0.tilde {
                let g: f64 = StandardNormal.sample(&mut rng);
                let dv = scale * g;
                v2 += dv * dv;
                tilde_p.push(base + dv);
            }
            let big_phi = z0.y * z0.y + v2;
            let sp: f64 = phi_mix.sample(&mut rng);
            let wscale = 1.0 / sp.sqrt();
            let mut phi = [0.0; 3];
            for slot in &mut phi {
                let g: f64 = StandardNormal.sample(&mut rng);
                *slot = 0.5 * big_phi * wscale * g;
            }
            // Solve (x1', x_{n+1}', y_{n+1}') from the phi definitions:
            // phi_i = special_i' - special_i + cross_i(tilde', tilde).
            let (_, cross) = phi_quat(z0, z0.x1, z0.xn1, z0.yn1, &tilde_p);
            QuatPoint {
                x1: z0.x1 + phi[0] - cross[0],
                y: z0.y,
                xn1: z0.xn1 + phi[1] - cross[1],
                yn1: z0.yn1 + phi[2] - cross[2],
                tilde: tilde_p,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{empirical_charfn, ks_two_sample};
    use approx::assert_abs_diff_eq;

    fn base_point() -> QuatPoint {
        QuatPoint::new(0.0, 1.0, 0.0, 0.0, vec![0.0; 4]).unwrap()
    }

    fn rand_xi(rng: &mut rand_chacha::ChaCha8Rng) -> [f64; 3] {
        let mut v = [0.0; 3];
        for s in &mut v {
            *s = StandardNormal.sample(rng);
        }
        v
    }

    #[test]
    fn xi_matrix_entries_and_eigenstructure() {
        // xi = (1,0,0): entries Xi_12 = 1, Xi_34 = 1 plus antisymmetric partners.
        let m = xi_matrix(&[1.0, 0.0, 0.0]);
        let expected: Mat4 = [
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
        ];
        assert_eq!(m, expected);
        // Characteristic polynomial is (l^2 + |xi|^2)^2, equivalently
        // Xi^2 = -|xi|^2 I.
        let mut rng = substream(3, 0, 0);
        for _ in 0..20 {
            let xi = rand_xi(&mut rng);
            let norm2: f64 = xi.iter().map(|v| v * v).sum();
            let m = xi_matrix(&xi);
            let m2 = mat_mul(&m, &m);
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { -norm2 } else { 0.0 };
                    assert_abs_diff_eq!(m2[i][j], want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn skew_block_invariants_random_and_axis() {
        let mut rng = substream(5, 0, 0);
        for trial in 0..100 {
            let xi = if trial % 10 == 0 {
                // Axis-aligned cases exercise the constructive branch.
                let mut v = [0.0; 3];
                v[trial / 10 % 3] = 1.0 + trial as f64 / 50.0;
                v
            } else {
                rand_xi(&mut rng)
            };
            let block = build_skew_block(&xi).unwrap();
            block.validate().unwrap();
        }
        assert!(build_skew_block(&[0.0; 3]).is_err());
    }

    #[test]
    fn f_form_invariance() {
        let mut rng = substream(6, 0, 0);
        for _ in 0..50 {
            let xi = rand_xi(&mut rng);
            let block = build_skew_block(&xi).unwrap();
            let mut fill = |v: &mut [f64; 4]| {
                for s in v.iter_mut() {
                    *s = StandardNormal.sample(&mut rng);
                }
            };
            let mut th = [[0.0; 4]; 2];
            let mut w = [[0.0; 4]; 2];
            fill(&mut th[0]);
            fill(&mut th[1]);
            fill(&mut w[0]);
            fill(&mut w[1]);
            let a = block.f_form(&th, &w);
            let b = block.f_form_hatted(&th, &w);
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn distance_basics() {
        let z = base_point();
        assert_eq!(dist_quat(&z, &z).unwrap(), 0.0);
        let z2 = QuatPoint::new(0.0, std::f64::consts::E, 0.0, 0.0, vec![0.0; 4]).unwrap();
        assert_abs_diff_eq!(dist_quat(&z, &z2).unwrap(), 1.0, epsilon = 1e-14);
        assert!(QuatPoint::new(0.0, 1.0, 0.0, 0.0, vec![0.0; 3]).is_err());
    }

    #[test]
    fn phis_do_not_depend_on_heights() {
        let mut rng = substream(7, 0, 0);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let tilde: Vec<f64> = (0..4).map(|_| draw()).collect();
        let tilde_p: Vec<f64> = (0..4).map(|_| draw()).collect();
        let mk = |y: f64, tilde: &[f64]| QuatPoint::new(0.3, y, -0.2, 0.9, tilde.to_vec()).unwrap();
        let (_, phis_a) = phi_quat(&mk(1.0, &tilde), 0.1, 0.2, 0.3, &tilde_p);
        let (_, phis_b) = phi_quat(&mk(4.2, &tilde), 0.1, 0.2, 0.3, &tilde_p);
        assert_eq!(phis_a, phis_b);
    }

    #[test]
    fn trajectory_starts_at_z0() {
        let cfg = SimConfig::new(9, 0.01, 0.04, 1).unwrap();
        let z0 = QuatPoint::new(0.2, 1.0, -0.3, 0.4, vec![0.5, -0.2, 0.1, 0.3]).unwrap();
        let traj = sample_quat_bm(&z0, &cfg, 0).unwrap();
        assert_eq!(traj.points[0], z0);
        let term = sample_quat_terminal(&z0, &cfg, 0).unwrap();
        assert_eq!(&term, traj.terminal());
    }

    #[test]
    fn log_height_moments() {
        // n=2, T=2: log Y(T) ~ N(-(2n+1) T, T) = N(-10, 2).
        let cfg = SimConfig::new(71, 0.01, 2.0, 10_000).unwrap();
        let logs: Vec<f64> =
            sample_quat_terminal_batch(&base_point(), &cfg).unwrap().iter().map(|p| p.y.ln()).collect();
        let m = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / m;
        let var = logs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        assert!((mean + 10.0).abs() < 4.0 * (2.0f64 / m).sqrt(), "mean {mean}");
        assert!((var - 2.0).abs() < 4.0 * 2.0 * (2.0 / (m - 1.0)).sqrt(), "var {var}");
    }

    #[test]
    fn special_coordinates_are_martingales() {
        let cfg = SimConfig::new(72, 0.01, 2.0, 8_000).unwrap();
        let z0 = QuatPoint::new(0.4, 1.0, -0.6, 0.2, vec![0.5, -0.2, 0.1, 0.3]).unwrap();
        let pts = sample_quat_terminal_batch(&z0, &cfg).unwrap();
        let m = pts.len() as f64;
        for (label, get, start) in [
            ("x1", (|p: &QuatPoint| p.x1) as fn(&QuatPoint) -> f64, z0.x1),
            ("xn1", |p: &QuatPoint| p.xn1, z0.xn1),
            ("yn1", |p: &QuatPoint| p.yn1, z0.yn1),
        ] {
            let vals: Vec<f64> = pts.iter().map(get).collect();
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            assert!((mean - start).abs() < 4.0 * se, "{label}: mean {mean}");
        }
    }

    #[test]
    fn kernel_value_and_decay() {
        // n=2, base point, boundary origin: 2^9 Gamma(4)/pi^4 = 3072/pi^4.
        let v = poisson_kernel_quat(2, (0.0, 0.0, 0.0, &[0.0; 4]), &base_point()).unwrap();
        assert_abs_diff_eq!(v, 31.537097486390278, epsilon = 1e-11);
        let far = poisson_kernel_quat(2, (100.0, -50.0, 20.0, &[10.0; 4]), &base_point()).unwrap();
        assert!(far > 0.0 && far < 1e-12);
    }

    #[test]
    fn charfn_normalization_and_rotation_invariance() {
        let spec = QuadratureSpec::default();
        // Small-frequency limit: value -> 1.
        let freq = QuatFreq::new([1e-4, 0.0, 0.0], vec![[0.0; 4]]).unwrap();
        let v = limit_charfn_quat(2, &freq, &base_point(), &spec).unwrap();
        assert!((v.re - 1.0).abs() < 1e-3 && v.im.abs() < 1e-3, "{v}");
        // With w = 0 and theta = 0 the value depends on xi only through
        // its norm.
        let r = 0.9f64;
        let dirs = [
            [r, 0.0, 0.0],
            [0.0, r, 0.0],
            [0.0, 0.0, r],
            [r / 3.0f64.sqrt(), r / 3.0f64.sqrt(), r / 3.0f64.sqrt()],
            [0.6 * r, -0.8 * r, 0.0],
        ];
        let base: Vec<Complex64> = dirs
            .iter()
            .map(|xi| limit_charfn_quat(2, &QuatFreq::new(*xi, vec![[0.0; 4]]).unwrap(), &base_point(), &spec).unwrap())
            .collect();
        for v in &base[1..] {
            assert_abs_diff_eq!(v.re, base[0].re, epsilon = 1e-10);
            assert_abs_diff_eq!(v.im, base[0].im, epsilon = 1e-10);
        }
    }

    #[test]
    fn charfn_reference_value_and_conjugate_symmetry() {
        // Desk-checked against 25-digit quadrature and 1e5-path simulation.
        let z0 = QuatPoint::new(0.2, 1.0, -0.3, 0.4, vec![0.5, -0.2, 0.1, 0.3]).unwrap();
        let freq = QuatFreq::new([0.6, -0.3, 0.5], vec![[0.4, -0.2, 0.3, 0.1]]).unwrap();
        let spec = QuadratureSpec::default();
        let v = limit_charfn_quat(2, &freq, &z0, &spec).unwrap();
        assert_abs_diff_eq!(v.re, 0.7039098791185289, epsilon = 1e-9);
        assert_abs_diff_eq!(v.im, 0.6050307188317674, epsilon = 1e-9);
        let neg = QuatFreq::new(
            [-0.6, 0.3, -0.5],
            vec![[-0.4, 0.2, -0.3, -0.1]],
        )
        .unwrap();
        let vm = limit_charfn_quat(2, &neg, &z0, &spec).unwrap();
        assert_abs_diff_eq!(v.re, vm.re, epsilon = 1e-9);
        assert_abs_diff_eq!(v.im, -vm.im, epsilon = 1e-9);
        assert!(v.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn charfn_matches_simulation() {
        // mu = 5: T = 4 leaves truncation error e^{-40}.
        let z0 = QuatPoint::new(0.2, 1.0, -0.3, 0.4, vec![0.5, -0.2, 0.1, 0.3]).unwrap();
        let cfg = SimConfig::new(81, 2e-3, 4.0, 10_000).unwrap();
        let pts = sample_quat_terminal_batch(&z0, &cfg).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.boundary_coords()).collect();
        let freq = QuatFreq::new([0.6, -0.3, 0.5], vec![[0.4, -0.2, 0.3, 0.1]]).unwrap();
        let est = empirical_charfn(&coords, &freq.flat()).unwrap();
        let ana = limit_charfn_quat(2, &freq, &z0, &QuadratureSpec::default()).unwrap();
        assert!(est.matches(ana, 4.0), "emp {:?} vs {ana}", est.value);
    }

    #[test]
    fn kernel_sampler_agrees_with_process_law() {
        let z0 = QuatPoint::new(0.2, 1.0, -0.3, 0.4, vec![0.5, -0.2, 0.1, 0.3]).unwrap();
        let cfg = SimConfig::new(82, 2e-3, 4.0, 4_000).unwrap();
        let sim = sample_quat_terminal_batch(&z0, &cfg).unwrap();
        let ker = sample_poisson_kernel_quat(&z0, 4_000, 83, 0);
        for j in [0usize, 1, 2, 3, 6] {
            let a: Vec<f64> = sim.iter().map(|p| p.boundary_coords()[j]).collect();
            let b: Vec<f64> = ker.iter().map(|p| p.boundary_coords()[j]).collect();
            let rep = ks_two_sample(&format!("marginal{j}"), &a, &b).unwrap();
            assert!(rep.passed, "marginal {j}: {rep:?}");
        }
    }
}
