use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is inconsistent or fails validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested integration step cannot resolve the fastest phase.
    #[error("unstable integration step: {0}")]
    UnstableStep(String),

    /// An iterative fit or optimization failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Not enough data points for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A scan or optimization referenced a parameter path that does not exist.
    #[error("unknown parameter path: {0}")]
    UnknownParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
