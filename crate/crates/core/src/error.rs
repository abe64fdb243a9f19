use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular or indefinite matrix: zero pivot at row {row}")]
    SingularMatrix { row: usize },

    #[error("field is not discretely divergence-free (|Bv| = {residual:.3e}, limit {limit:.3e})")]
    NotDivergenceFree { residual: f64, limit: f64 },

    #[error("time interval {interval}: {source}")]
    IntervalSolve {
        interval: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mismatched discretizations: {0}")]
    Mismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
