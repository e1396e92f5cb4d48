//! Crate-wide error type.
//!
//! All fallible operations return [`Result`].  Errors are split roughly into
//! three families: domain violations (mismatched ground domains, duplicate or
//! non-positive elements), resource guards (capacity and budget limits), and
//! run outcomes that a caller is expected to branch on (`HypothesisFailed`,
//! `NoIndexFound`, `PipelineStalled`).

use std::fmt;

/// Pipeline stage identifiers, used by [`Error::PipelineStalled`] and stage logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    SmallDoubling,
    GapCover,
    Clean,
    Collapse,
    LocalToGlobal,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::SmallDoubling => "small-doubling scan",
            Stage::GapCover => "progression-cover search",
            Stage::Clean => "cleaning",
            Stage::Collapse => "rank-one collapse",
            Stage::LocalToGlobal => "local-to-global",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("operands belong to different ground domains")]
    DomainMismatch,
    #[error("comparison cannot be certified within the declared approximation error")]
    UncertifiedComparison,
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate element: {0}")]
    DuplicateElement(String),
    #[error("element must be positive: {0}")]
    NonPositiveElement(String),
    #[error("element must be nonzero")]
    ZeroElement,
    #[error("difference must be nonzero")]
    ZeroDifference,
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("the adjoined element must exceed every element of the base set")]
    XNotLargest,
    #[error("input is contained in an affine line")]
    CollinearInput,
    #[error("no pair with a small collision count was found")]
    PairNotFound,
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("search space is empty: {0}")]
    EmptySearch(String),
    #[error("no table value usable for ({n}, {m})")]
    TableGap { n: u64, m: i64 },
    #[error("value has no preimage in the box: {0}")]
    NotInGap(String),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("no prefix index satisfies the growth threshold")]
    NoIndexFound,
    #[error("pipeline stalled at {stage}: {detail}")]
    PipelineStalled { stage: Stage, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
