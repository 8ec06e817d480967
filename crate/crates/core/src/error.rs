use thiserror::Error;

use crate::env_model::ValidationReport;

/// Errors produced by the exact-computation and bound layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance failed validation: {0}")]
    Validation(ValidationReport),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{what} cap exceeded: {count} > {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("observation at step {step} has zero likelihood under every parameter in the prior support")]
    ZeroLikelihood { step: usize },

    #[error("Bayesian regret cross-check failed: direct {direct} vs decomposed {decomposed}")]
    CrossCheck { direct: f64, decomposed: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("linear program {0}")]
    Lp(#[from] crate::simplex::LpError),

    #[error("non-finite entry at [{row}][{col}]")]
    NonFinite { row: usize, col: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
