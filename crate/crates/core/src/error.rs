use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("point {0:?} is not in the domain")]
    NotInDomain(Vec<f64>),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("domain is unbounded; an explicit bbox is required")]
    Unbounded,

    #[error("grid has no point inside the domain")]
    EmptyInterior,

    #[error("grid of {points} points exceeds the node budget of {budget}")]
    BudgetExceeded { points: usize, budget: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("spectrum only reaches {largest}, requested {requested}; compute more eigenvalues")]
    InsufficientSpectrum { largest: f64, requested: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("eigenvectors were not computed")]
    MissingEigenvectors,

    #[error("packing verification failed: {0}")]
    PackingViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
