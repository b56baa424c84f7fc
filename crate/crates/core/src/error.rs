use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    #[error(
        "expected edge count {expected:.3e} exceeds the configured cap {cap:.3e}; \
         raise the cap or shrink n"
    )]
    EdgeBudgetExceeded { expected: f64, cap: f64 },

    #[error("duplicate edge weight {weight} on edges {first:?} and {second:?}; MST is not unique")]
    DuplicateWeight {
        weight: f64,
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("{0}")]
    Invariant(String),

    #[error("parse error in {path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
