use thiserror::Error;

/// Errors raised by the estimators and closed-form layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A moment or risk measure that is infinite for the given shape.
    #[error("{quantity} does not exist for xi = {xi}")]
    NotExist { quantity: &'static str, xi: f64 },

    #[error("no sign change found while bracketing a root: {0}")]
    NoRoot(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    /// Input is degenerate (constant, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    /// Observations outside the support of a parametric family.
    #[error("support violation: {0}")]
    Support(String),

    /// Wraps an error raised while evaluating one block size.
    #[error("at block size {n}: {source}")]
    AtBlockSize {
        n: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_block_size(self, n: impl Into<f64>) -> Self {
        Error::AtBlockSize {
            n: n.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with block-size context stripped.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtBlockSize { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
