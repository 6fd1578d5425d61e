use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} out of range ({limit})")]
    Range {
        what: &'static str,
        value: String,
        limit: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid mixture weights: {0}")]
    Weights(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("horizon mismatch: {0}")]
    Horizon(String),

    #[error("non-finite state at step {step}{}", path.map(|p| format!(" (path {p})")).unwrap_or_default())]
    BlowUp { step: usize, path: Option<usize> },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl ToString, limit: impl ToString) -> Self {
        Error::Range {
            what,
            value: value.to_string(),
            limit: limit.to_string(),
        }
    }

    /// Attaches a Monte-Carlo path index to a blow-up error.
    pub fn with_path(self, index: usize) -> Self {
        match self {
            Error::BlowUp { step, .. } => Error::BlowUp {
                step,
                path: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
