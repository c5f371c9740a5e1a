use thiserror::Error;

/// Errors raised by the spectral estimation, optimization and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of the operands do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A spectral sample that must be positive definite is not.
    #[error("non-positive spectral sample at grid node {node} (min eigenvalue {min_eigenvalue:e})")]
    Domain { node: usize, min_eigenvalue: f64 },

    /// A matrix that must be positive definite (off-grid) is not.
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(String),

    /// Caller supplied an invalid argument.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The solver could not make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Synthetic model generation failed.
    #[error("model generation failed: {0}")]
    Generation(String),

    /// A recursive step failed; wraps the underlying cause.
    #[error("window {window}: {source}")]
    Window {
        window: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
