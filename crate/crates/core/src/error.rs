use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A valid configuration that this solver deliberately does not handle.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Diffusion coefficient is zero, negative or not finite for this path.
    #[error("invalid diffusion coefficient a = {0}")]
    InvalidCoefficient(f64),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("problem size {size} exceeds the configured cap of {cap} degrees of freedom")]
    ResourceCap { size: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
