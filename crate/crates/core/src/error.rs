use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sign change found for zero {index} of J_{order} below r = {horizon}")]
    SearchExhausted { order: f64, index: usize, horizon: f64 },

    #[error("root finder did not converge after {iterations} iterations, last bracket [{lo}, {hi}]")]
    Convergence { iterations: usize, lo: f64, hi: f64 },

    #[error("only {found} of {wanted} zeros found before the integration horizon ln r = {horizon}")]
    Horizon { found: usize, wanted: usize, horizon: f64 },

    #[error("step size underflow at ln r = {at} (h = {step:e})")]
    Stiffness { at: f64, step: f64 },

    #[error("expected {expected} negative eigenvalues, discretization has {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("degenerate solution: nu_{i} + c_{j} = {residual:e} is within tolerance")]
    Degenerate { i: usize, j: u32, residual: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("odd crossing count violated: {0}")]
    Parity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category used on the CLI diagnostic stream.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::SearchExhausted { .. } => "search-exhausted",
            Error::Convergence { .. } => "convergence",
            Error::Horizon { .. } => "horizon",
            Error::Stiffness { .. } => "stiffness",
            Error::CountMismatch { .. } => "count-mismatch",
            Error::Numerical(_) => "numerical",
            Error::Unsupported(_) => "unsupported",
            Error::Degenerate { .. } => "degenerate-input",
            Error::Inconsistency(_) => "internal-inconsistency",
            Error::Overflow(_) => "arithmetic",
            Error::Parity(_) => "parity",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
