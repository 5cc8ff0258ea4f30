use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("projection direction has zero norm")]
    ZeroDirection,

    #[error("SVD did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    /// The residual vanished before the requested number of columns was
    /// extracted. `indices` holds what was extracted up to that point.
    #[error("residual vanished after extracting {found} of {requested} columns")]
    RankDeficiency {
        found: usize,
        requested: usize,
        indices: Vec<usize>,
    },

    #[error("cannot parse input: {0}")]
    Parse(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("solver stopped after {iterations} iterations without reaching tolerance")]
    MaxItersExceeded { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
