use thiserror::Error;

use crate::stability::StabilityReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("expected {expected} boundary values, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("mesh must have at least {min} nodes, got {got}")]
    MeshTooCoarse { min: usize, got: usize },

    #[error("eigen-iteration did not converge after {iterations} iterations (last change {last_change:.3e}, residual {residual:.3e})")]
    IterationLimit {
        iterations: usize,
        last_change: f64,
        residual: f64,
    },

    #[error("boundary data violates the solvability condition: sum(data*length) = {mean:.3e} (tolerance {tol:.1e})")]
    FredholmViolation { mean: f64, tol: f64 },

    #[error("mode {k} operator is not positive definite at lambda = {lambda} (pivot {pivot:.3e})")]
    Resonance { k: u32, lambda: f64, pivot: f64 },

    #[error("no positivity streak before k_max = {k_max}; partial report attached")]
    TruncationInconclusive { k_max: u32, partial: Box<StabilityReport> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("unknown surface '{0}' (expected sphere-band, sphere-polar or flat)")]
    UnknownSurface(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IterationLimit { .. }
                | Error::Resonance { .. }
                | Error::TruncationInconclusive { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
