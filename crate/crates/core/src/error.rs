use thiserror::Error;

use crate::sunflower::SunflowerWitness;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel uncovered: no member contains {0:?}")]
    KernelUncovered(Vec<u32>),

    #[error("precondition violated: found an L-sunflower with {} petals and kernel {:?}", .0.petal_indices.len(), .0.kernel)]
    SunflowerFound(SunflowerWitness),

    #[error("precondition violated: members {0:?} form a forbidden clique")]
    CliqueFound(Vec<usize>),

    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("guarantee violated: {0}")]
    GuaranteeViolated(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
