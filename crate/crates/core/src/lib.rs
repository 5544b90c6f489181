//! Simulation and analytics for Brownian motion on the real, complex and
//! quaternionic hyperbolic half-spaces.
//!
//! The samplers evaluate the closed-form solutions of the defining
//! stochastic differential equations (the height coordinate is an exact
//! geometric Brownian motion; lateral coordinates are Ito sums driven by
//! it), and the analytic side provides the matching limit laws: Poisson
//! kernels, their Fourier transforms, first-hitting characteristic
//! functions, and the Laplace transforms of the perpetual integrals of
//! geometric Brownian motion that power all of them. A statistical
//! harness turns each limit theorem into a pass/fail report.

pub mod campaigns;
pub mod complexspace;
pub mod config;
pub mod error;
pub mod gbm;
pub mod parallel;
pub mod path;
pub mod quad;
pub mod quat;
pub mod real;
pub mod report;
pub mod rng;
pub mod special;
pub mod stats;

pub use config::{DriftParam, SimConfig};
pub use error::{Error, Result};
pub use path::{exp_functionals, levy_area, levy_area_charfn, sample_bm_path, ExpFunctionals, PathSample};
pub use quad::QuadratureSpec;
pub use stats::TestReport;

/// A sampled path of space points on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<P> {
    pub t: Vec<f64>,
    pub points: Vec<P>,
}

impl<P> Trajectory<P> {
    pub fn terminal(&self) -> &P {
        self.points.last().expect("trajectory has at least the start point")
    }
}
