use std::path::PathBuf;

/// Errors produced by the optimizer and its building blocks.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("truncated normal interval [{lo}, {hi}] around {mu} has mass {mass:e}, below 1e-300")]
    NumericUnderflow { mu: f64, lo: f64, hi: f64, mass: f64 },

    #[error("sobol sequences support at most {max} dimensions, got {requested}")]
    UnsupportedDimension { requested: usize, max: usize },

    #[error("point {point:?} lies outside the search space")]
    OutOfBounds { point: Vec<f64> },

    #[error("no unevaluated candidates left in the pool")]
    PoolExhausted,

    #[error("objective returned NaN at evaluation {evaluation}")]
    ObjectiveNan { evaluation: usize },

    #[error("acquisition surface returned NaN at {point:?}")]
    SurfaceNan { point: Vec<f64> },

    #[error("closed-form oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
