//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by simulation, diagnostics and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid, window or array extent is empty or otherwise unusable.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Index pair outside the valid range of a table or array.
    #[error("bounds error: {0}")]
    Bounds(String),

    /// A continuous argument is outside its domain (e.g. t outside the unit square).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested operation is not defined for this model variant.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// A numeric parameter is out of its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A coefficient family fails square-summability (q <= 1).
    #[error("divergent coefficient family: {0}")]
    Divergence(String),

    /// An exact enumeration would exceed the supported outcome count.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A statistical test received a degenerate (constant) sample.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// Config validation failures; every violation is listed.
    #[error("invalid config:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class: 1 for config validation, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            _ => 2,
        }
    }
}
