use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: result would hold {requested} entries (cap {cap})")]
    Capacity { requested: u128, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate lift: the system has no nonlinear block to lift")]
    DegenerateLift,

    #[error("numerical failure in {stage}: {detail}")]
    NumericalFailure { stage: &'static str, detail: String },

    #[error("singular normal equations: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericalFailure {
            stage,
            detail: detail.into(),
        }
    }

    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Domain(_) => "domain",
            Error::Capacity { .. } => "capacity",
            Error::NonFinite(_) => "non_finite",
            Error::DegenerateLift => "degenerate_lift",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::Singular(_) => "singular",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
