use thiserror::Error;

/// Errors produced by sketch construction, updates, queries and decoding.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("item {item} outside universe of size {universe}")]
    ItemOutOfRange { item: u64, universe: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("query on an empty histogram")]
    EmptyHistogram,

    #[error("sketches were built from different seeds and cannot be merged")]
    SeedMismatch,

    #[error("column is not non-increasing from top to bottom")]
    NonMonotoneColumn,

    #[error("clock went backwards: last {last}, got {got}")]
    NonMonotoneClock { last: u64, got: u64 },

    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, SketchError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SketchError {
    SketchError::InvalidParameter(msg.into())
}

pub(crate) fn check_item(item: u64, universe: u64) -> Result<()> {
    if item < universe {
        Ok(())
    } else {
        Err(SketchError::ItemOutOfRange { item, universe })
    }
}
