use thiserror::Error;

/// Every failure the library reports. The `Display` strings double as the
/// stable error tags used in reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("resolution must be positive")]
    ZeroResolution,
    #[error("glue map is not an isomorphism: {0}")]
    NotIsomorphism(String),
    #[error("cell set is not closed under faces")]
    NotClosed,
    #[error("cell {0} is not a top cell")]
    NotTopCell(usize),
    #[error("cell {cell} is not in the reference set")]
    NotInSet { cell: usize },
    #[error("unsupported-ring: {0}")]
    UnsupportedRing(String),
    #[error("unknown flow '{0}'")]
    UnknownFlow(String),
    #[error("unknown catalog entry '{0}'")]
    UnknownCatalog(String),
    #[error("flow '{0}' has no refinement rule")]
    NoRefinement(String),
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("not-isolated: {0}")]
    NotIsolated(String),
    #[error("no-block: {0}")]
    NoBlock(String),
    #[error("non-regular block: {0}")]
    NonRegular(String),
    #[error("separating-cycle: {0}")]
    SeparatingCycle(String),
    #[error("no product collar: {0}")]
    NoCollar(String),
    #[error("invalid cycle: {0}")]
    InvalidCycle(String),
    #[error("not positively invariant: {0}")]
    NotPositivelyInvariant(String),
    #[error("no room to attach: {0}")]
    NoRoom(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("unknown theorem id '{0}'")]
    UnknownTheorem(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
