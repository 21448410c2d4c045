/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Grid order zero gives a single node and no interval to work on.
    #[error("grid order must be at least 1")]
    DegenerateGrid,

    /// Sample vector length does not match the grid.
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Evaluation outside `[-1, 1]`; no extrapolation.
    #[error("evaluation point {0} lies outside [-1, 1]")]
    OutOfDomain(f64),

    /// `W(x)` failed its Cholesky factorization.
    #[error("metric is not positive-definite at state {state:?}")]
    MetricDegenerate { state: Vec<f64> },

    /// `W(x)` was not symmetric to working precision.
    #[error("metric is not symmetric at state {state:?}")]
    MetricAsymmetric { state: Vec<f64> },

    /// A state left the finite range during integration.
    #[error("state became non-finite at t = {t}")]
    Blowup { t: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
