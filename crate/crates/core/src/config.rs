use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of grid steps a single path may use.
pub const MAX_GRID_STEPS: f64 = 1e8;

/// Discretization and reproducibility parameters shared by every sampler.
///
/// The same `(seed, stream_id)` pair always reproduces the same path,
/// bit for bit, no matter how many worker threads are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Requested step size. The effective step is `horizon / n_steps()`
    /// with `n_steps = round(horizon / dt)`, so the grid always ends
    /// exactly at the horizon.
    pub dt: f64,
    pub horizon: f64,
    pub n_samples: u64,
    pub n_workers: usize,
}

impl SimConfig {
    pub fn new(seed: u64, dt: f64, horizon: f64, n_samples: u64) -> Result<Self> {
        let cfg = SimConfig { seed, dt, horizon, n_samples, n_workers: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::Config(format!(
                "horizon must be >= dt, got horizon={} dt={}",
                self.horizon, self.dt
            )));
        }
        if self.horizon / self.dt > MAX_GRID_STEPS {
            return Err(Error::Config(format!(
                "horizon/dt = {:.3e} exceeds the grid guard of {:.0e}",
                self.horizon / self.dt,
                MAX_GRID_STEPS
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps on the uniform grid `{0, dt_eff, ..., horizon}`.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    /// Effective step size; equals `dt` whenever `horizon` is a multiple of it.
    pub fn dt_eff(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }
}

/// Drift of the underlying geometric Brownian motion `exp(B(t) - mu t)`.
///
/// The space samplers force the value: `n/2` on the real half-space of
/// dimension n+1, `n` on the complex one, `2n+1` on the quaternionic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftParam {
    mu: f64,
}

impl DriftParam {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("drift mu must be positive, got {mu}")));
        }
        Ok(DriftParam { mu })
    }

    pub fn real_space(n: usize) -> Self {
        DriftParam { mu: n as f64 / 2.0 }
    }

    pub fn complex_space(n: usize) -> Self {
        DriftParam { mu: n as f64 }
    }

    pub fn quat_space(n: usize) -> Self {
        DriftParam { mu: 2.0 * n as f64 + 1.0 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Horizon at which a truncated perpetual integral is indistinguishable
    /// from its infinite-horizon limit at Monte Carlo resolution: the
    /// relative tail of `A_T` is O(exp(-2 mu T)), so `mu T = 15` leaves
    /// roughly 1e-13.
    pub fn truncation_horizon(&self) -> f64 {
        15.0 / self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_guards() {
        assert!(SimConfig::new(1, 0.0, 1.0, 1).is_err());
        assert!(SimConfig::new(1, 2.0, 1.0, 1).is_err());
        assert!(SimConfig::new(1, 1e-9, 1.0, 0).is_err());
        assert!(SimConfig::new(1, 1e-9, 1e3, 1).is_err()); // 1e12 steps
        let cfg = SimConfig::new(1, 1e-3, 1.0, 10).unwrap();
        assert_eq!(cfg.n_steps(), 1000);
        assert!((cfg.dt_eff() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn forced_drifts() {
        assert_eq!(DriftParam::real_space(2).mu(), 1.0);
        assert_eq!(DriftParam::complex_space(2).mu(), 2.0);
        assert_eq!(DriftParam::quat_space(2).mu(), 5.0);
        assert!(DriftParam::new(-1.0).is_err());
    }
}
