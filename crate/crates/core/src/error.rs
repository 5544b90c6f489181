use thiserror::Error;

/// Errors raised by samplers, analytic evaluators and the verification
/// harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A simulation configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two arguments that must live on the same grid or in the same
    /// space do not match.
    #[error("argument mismatch: {0}")]
    Mismatch(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A Monte Carlo estimator degenerated (for example, the effective
    /// sample size of an importance sampler collapsed).
    #[error("degenerate Monte Carlo estimate: {0}")]
    Degenerate(String),

    /// Writing an output artifact failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
