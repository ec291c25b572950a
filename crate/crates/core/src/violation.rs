//! Machine-readable constraint violations shared by graph and plan validation.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    // graph / scenario
    DuplicateNode,
    UnknownNode,
    MultiAttach,
    Unattached,
    BadAttachment,
    BadLink,
    BadServer,
    SingleCycleViolation,
    BadRbGrid,
    BadDemand,
    PeriodMismatch,
    // plan
    MissingDecision,
    RejectedHolds,
    HopBound,
    PathShape,
    ShiftBounds,
    RbWindow,
    RbConflict,
    RbCapacityShort,
    StaleReport,
    DeadlineMiss,
    LinkOverflow,
    ServerOverflow,
    ObjectiveMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DuplicateNode => "duplicate-node",
            Self::UnknownNode => "unknown-node",
            Self::MultiAttach => "multi-attach",
            Self::Unattached => "unattached",
            Self::BadAttachment => "bad-attachment",
            Self::BadLink => "bad-link",
            Self::BadServer => "bad-server",
            Self::SingleCycleViolation => "single-cycle-violation",
            Self::BadRbGrid => "bad-rb-grid",
            Self::BadDemand => "bad-demand",
            Self::PeriodMismatch => "period-mismatch",
            Self::MissingDecision => "missing-decision",
            Self::RejectedHolds => "rejected-holds",
            Self::HopBound => "hop-bound",
            Self::PathShape => "path-shape",
            Self::ShiftBounds => "shift-bounds",
            Self::RbWindow => "rb-window",
            Self::RbConflict => "rb-conflict",
            Self::RbCapacityShort => "rb-capacity-short",
            Self::StaleReport => "stale-report",
            Self::DeadlineMiss => "deadline-miss",
            Self::LinkOverflow => "link-overflow",
            Self::ServerOverflow => "server-overflow",
            Self::ObjectiveMismatch => "objective-mismatch",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<u32>,
    pub detail: String,
}

impl Violation {
    pub fn new(code: ViolationCode, detail: impl Into<String>) -> Self {
        Self {
            code,
            demand: None,
            detail: detail.into(),
        }
    }

    pub fn for_demand(code: ViolationCode, demand: u32, detail: impl Into<String>) -> Self {
        Self {
            code,
            demand: Some(demand),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.demand {
            Some(d) => write!(f, "[{}] demand {}: {}", self.code, d, self.detail),
            None => write!(f, "[{}] {}", self.code, self.detail),
        }
    }
}

pub fn codes(violations: &[Violation]) -> Vec<ViolationCode> {
    violations.iter().map(|v| v.code).collect()
}
