use thiserror::Error;

/// Errors shared across the density, solver and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge: {0}")]
    NonConverged(String),

    #[error("quadrature failed: {0}")]
    QuadratureFail(String),

    #[error("CFL violation: dt = {dt} exceeds stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
