use thiserror::Error;

/// Errors raised by grid construction, the forward solver and the
/// regularization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    Singular { row: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("iteration diverged at outer step {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `true` for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Shape(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
