use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resonant detuning: delta = {delta} lies on a non-positive integer (distance {distance:.3e})")]
    Resonant { delta: String, distance: f64 },

    #[error("hypergeometric parameter b = {0} is a non-positive integer")]
    NonPositiveIntegerParameter(String),

    #[error("series did not converge within {max_terms} terms")]
    MaxTermsExceeded { max_terms: usize },

    #[error("matrix is not symmetric (max |M - M^T| = {0:.3e})")]
    NotSymmetric(f64),

    #[error("takagi factorization failed: {0}")]
    Factorization(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("hilbert space too large: dimension {dim} exceeds limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("steady state solver failed: {0}")]
    SolverFailed(String),

    #[error("fixed point does not exist: {0}")]
    NoFixedPoint(String),

    #[error("above parametric threshold: {0}")]
    AboveThreshold(String),

    #[error("susceptibility grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
