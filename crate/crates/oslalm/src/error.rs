//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value rejected in {0}")]
    NonFinite(&'static str),

    #[error("invalid sparse matrix structure: {0}")]
    InvalidSparseStructure(String),

    #[error("diagonal operator requires non-negative entries")]
    NegativeDiagonal,

    #[error("diagonal operator has a zero entry at {index}; cannot invert")]
    SingularDiagonal { index: usize },

    #[error("power iteration did not converge in {iters} iterations (last estimate {estimate})")]
    PowerIterationNoConvergence { estimate: f64, iters: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("subset count {m} exceeds number of views {n_views}")]
    TooManySubsets { m: usize, n_views: usize },

    #[error("region of interest contains no pixels")]
    EmptyRoi,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("secant curvature s'Ds is zero; cannot fit scaling factor")]
    DegenerateSecant,

    #[error("solver configuration conflict: {0}")]
    ConfigConflict(String),

    #[error("step size condition violated: sigma*tau*||A||^2 = {value} must be < 1")]
    StepSizeCondition { value: f64 },

    #[error("reference point is infeasible (h is infinite there)")]
    InfeasibleReference,

    #[error("fewer than 2 restarts observed")]
    TooFewRestarts,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }
}
