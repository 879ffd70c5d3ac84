use thiserror::Error;

/// Errors raised by grid construction, solvers and audits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operation requires the {required} backend")]
    UnsupportedBackend { required: &'static str },

    #[error("steady part unsolvable at lambda=0: mean forcing coefficient is {0:e}")]
    SteadyUnsolvable(f64),

    #[error("boundary data has net flux {flux:e} at time sample {t} (surface area {area:e})")]
    BoundaryFlux { t: usize, flux: f64, area: f64 },

    #[error("mode solve k={k} did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged {
        k: i64,
        residual: f64,
        iterations: usize,
    },

    #[error("Picard iteration diverged at iteration {iteration} (residual {residual:e}); reduce the data or increase lambda (advised data bound {advised_epsilon:e})")]
    Diverged {
        iteration: usize,
        residual: f64,
        advised_epsilon: f64,
    },

    #[error("Picard iteration reached max_iter={max_iter} with residual {residual:e}")]
    MaxIterations { max_iter: usize, residual: f64 },

    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
