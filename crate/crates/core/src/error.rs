use thiserror::Error;

/// Failure modes shared by every pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed input data (files, parameters, tables).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The discretization is too coarse for the requested accuracy.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// An iterative method did not reach its tolerance.
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A quadratic form that must be positive produced a non-positive curvature.
    #[error("operator is not positive definite ({0})")]
    Indefinite(String),

    /// A three-body potential failed the permutation symmetry check.
    #[error("potential is not three-body symmetric: worst violation {worst:e} at {point:?}")]
    Asymmetric { worst: f64, point: Vec<f64> },

    /// A requested basis or grid would exceed the configured memory cap.
    #[error("dimension {dimension} needs {bytes} bytes, above the cap of {cap} bytes")]
    MemoryCap {
        dimension: usize,
        bytes: u64,
        cap: u64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an iterative numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Indefinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
