use thiserror::Error;

use crate::violation::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cycle index {index} outside 0..{count}")]
    CycleOutOfRange { index: u64, count: u32 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("RB (tti {tti}, band {band}) at {ap} is already held by demand {holder}")]
    RbConflict {
        ap: String,
        tti: u32,
        band: u32,
        holder: u32,
    },

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("{} validation violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<Violation>),

    #[error("trace set is empty")]
    EmptyTraces,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
