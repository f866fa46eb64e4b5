use thiserror::Error;

use crate::coverage::CertifiedRadius;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),

    #[error("number of time steps must be at least 1, got {0}")]
    InvalidSteps(usize),

    #[error("direction has zero vertical component")]
    ZeroVerticalComponent,

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(&'static str),

    /// No trajectory hits the cube base, so no finite radius covers the cube.
    #[error("model has no trajectories; no finite radius covers the cube")]
    EmptyModel,

    #[error("evaluation budget exhausted; best bracket [{}, {}]", best.lower, best.upper)]
    BudgetExhausted { best: CertifiedRadius },

    #[error("distance must be positive, got {0}")]
    InvalidDistance(f64),

    #[error("point height must be positive, got {0}")]
    DegenerateHeight(f64),

    #[error("quadrature did not reach tolerance {tol} (estimated error {abs_error})")]
    QuadratureDidNotConverge { tol: f64, abs_error: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
