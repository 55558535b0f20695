//! Distribution and static scheduling of flat algorithm graphs.

mod problem;
mod schedule;
mod table;
mod verify;
mod waits;

use thiserror::Error;

use crate::report::ValidationReport;

pub use schedule::{adequate, adequate_with_cancel, candidate_cost};
pub use table::{
    EntryKind, Lane, LaneKind, Payload, ScheduleEntry, ScheduleTable, SynchroEdge, SynchroScope,
    TimerGate,
};
pub use verify::verify_schedule;
pub use waits::insert_waits;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdequationError {
    #[error("UNROUTABLE: no medium connects the operators of {producer} and {consumer}")]
    Unroutable { producer: String, consumer: String },
    #[error("NO_DURATION: {subject} has no duration on any admissible operator")]
    NoDuration { subject: String },
    #[error("PERIOD_OVERFLOW: {subject} ends at {end}, beyond {bound}")]
    PeriodOverflow { subject: String, end: u64, bound: u64 },
    #[error("NON_HARMONIC: periods {periods:?} do not divide each other")]
    NonHarmonic { periods: Vec<u64> },
    #[error("DELAY_RATE: delay {delay} and its feeder run at different rates")]
    DelayRateMismatch { delay: String },
    #[error("UNKNOWN_OPERATOR: {block} refers to operator {operator}")]
    UnknownOperator { block: String, operator: String },
    #[error("NOT_FLAT: the graph still contains super blocks")]
    NotFlat,
    #[error("NOT_READY: {block} has unplaced predecessors or no unplaced instance")]
    NotReady { block: String },
    #[error("INCONSISTENT: {subject} does not belong to the graph")]
    Inconsistent { subject: String },
    #[error("INVALID_MODEL:\n{0}")]
    InvalidModel(ValidationReport),
    #[error("CANCELLED: adequation was cancelled")]
    Cancelled,
}

impl AdequationError {
    pub fn code(&self) -> &'static str {
        match self {
            AdequationError::Unroutable { .. } => "UNROUTABLE",
            AdequationError::NoDuration { .. } => "NO_DURATION",
            AdequationError::PeriodOverflow { .. } => "PERIOD_OVERFLOW",
            AdequationError::NonHarmonic { .. } => "NON_HARMONIC",
            AdequationError::DelayRateMismatch { .. } => "DELAY_RATE",
            AdequationError::UnknownOperator { .. } => "UNKNOWN_OPERATOR",
            AdequationError::NotFlat => "NOT_FLAT",
            AdequationError::NotReady { .. } => "NOT_READY",
            AdequationError::Inconsistent { .. } => "INCONSISTENT",
            AdequationError::InvalidModel(_) => "INVALID_MODEL",
            AdequationError::Cancelled => "CANCELLED",
        }
    }
}
