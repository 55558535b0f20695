//! Coded findings produced by the validators.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed set of finding codes shared by every validator in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    // algorithm graphs
    Cycle,
    DanglingRef,
    TypeMismatch,
    WidthMismatch,
    MultipleFeed,
    SensorInput,
    ActuatorOutput,
    DelayShape,
    DuplicateName,
    UnknownType,
    BadName,
    BadDirection,
    SuperBody,
    // architecture graphs
    UnresolvedGate,
    Arity,
    GateReuse,
    BadClock,
    // schedules
    LaneOverlap,
    LaneKind,
    UnknownLane,
    Order,
    Pairing,
    UnrealizedDep,
    Deadlock,
    Constraint,
    MissingBlock,
    NoDuration,
    Period,
    // hybrid diagrams
    UnsynchronizedClocks,
    BadLink,
    BadActivation,
    AlgebraicLoop,
    BadTransition,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Cycle => "CYCLE",
            Code::DanglingRef => "DANGLING_REF",
            Code::TypeMismatch => "TYPE_MISMATCH",
            Code::WidthMismatch => "WIDTH_MISMATCH",
            Code::MultipleFeed => "MULTIPLE_FEED",
            Code::SensorInput => "SENSOR_INPUT",
            Code::ActuatorOutput => "ACTUATOR_OUTPUT",
            Code::DelayShape => "DELAY_SHAPE",
            Code::DuplicateName => "DUPLICATE_NAME",
            Code::UnknownType => "UNKNOWN_TYPE",
            Code::BadName => "BAD_NAME",
            Code::BadDirection => "BAD_DIRECTION",
            Code::SuperBody => "SUPER_BODY",
            Code::UnresolvedGate => "UNRESOLVED_GATE",
            Code::Arity => "ARITY",
            Code::GateReuse => "GATE_REUSE",
            Code::BadClock => "BAD_CLOCK",
            Code::LaneOverlap => "LANE_OVERLAP",
            Code::LaneKind => "LANE_KIND",
            Code::UnknownLane => "UNKNOWN_LANE",
            Code::Order => "ORDER",
            Code::Pairing => "PAIRING",
            Code::UnrealizedDep => "UNREALIZED_DEP",
            Code::Deadlock => "DEADLOCK",
            Code::Constraint => "CONSTRAINT",
            Code::MissingBlock => "MISSING_BLOCK",
            Code::NoDuration => "NO_DURATION",
            Code::Period => "PERIOD",
            Code::UnsynchronizedClocks => "UNSYNCHRONIZED_CLOCKS",
            Code::BadLink => "BAD_LINK",
            Code::BadActivation => "BAD_ACTIVATION",
            Code::AlgebraicLoop => "ALGEBRAIC_LOOP",
            Code::BadTransition => "BAD_TRANSITION",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: Code,
    /// Path of the offending element (block, dependency, lane, ...).
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.subject, self.message)
    }
}

/// Ordered list of findings. An empty report means the checked value is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, code: Code, subject: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn count(&self, code: Code) -> usize {
        self.findings.iter().filter(|f| f.code == code).count()
    }

    pub fn has(&self, code: Code) -> bool {
        self.count(code) > 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}
