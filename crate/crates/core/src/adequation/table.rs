use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{GateRef, MediumKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Compute,
    Send,
    Receive,
    Wait,
    TimerReserve,
}

impl EntryKind {
    pub fn is_transfer(self) -> bool {
        matches!(self, EntryKind::Send | EntryKind::Receive)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryKind::Compute => "compute",
            EntryKind::Send => "send",
            EntryKind::Receive => "receive",
            EntryKind::Wait => "wait",
            EntryKind::TimerReserve => "timer_reserve",
        }
    }
}

/// Data carried by a transfer: which output feeds which input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub dtype: String,
    pub width: u32,
    /// Entry id of the producing compute entry.
    pub producer: String,
    pub from_port: String,
    /// Entry id of the consuming compute entry.
    pub consumer: String,
    pub to_port: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub id: String,
    pub lane: String,
    pub kind: EntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
    /// Repetition index of a multi-rate block within the hyperperiod.
    #[serde(default)]
    pub instance: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    pub start_stu: u64,
    pub duration_stu: u64,
}

impl ScheduleEntry {
    pub fn end_stu(&self) -> u64 {
        self.start_stu + self.duration_stu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynchroScope {
    Intra,
    Inter,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SynchroEdge {
    pub from: String,
    pub to: String,
    pub scope: SynchroScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LaneKind {
    Operator {
        op_type: String,
    },
    Medium {
        medium_kind: MediumKind,
        broadcast: bool,
        attach: Vec<GateRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub name: String,
    #[serde(flatten)]
    pub kind: LaneKind,
}

impl Lane {
    pub fn is_operator(&self) -> bool {
        matches!(self.kind, LaneKind::Operator { .. })
    }

    /// Operators attached to a medium lane, in attachment order.
    pub fn members(&self) -> Vec<String> {
        match &self.kind {
            LaneKind::Operator { .. } => Vec::new(),
            LaneKind::Medium { attach, .. } => {
                let mut out: Vec<String> = Vec::new();
                for g in attach {
                    if !out.contains(&g.operator) {
                        out.push(g.operator.clone());
                    }
                }
                out
            }
        }
    }

    pub fn gate_of(&self, operator: &str) -> Option<&str> {
        match &self.kind {
            LaneKind::Medium { attach, .. } => attach
                .iter()
                .find(|g| g.operator == operator)
                .map(|g| g.gate.as_str()),
            LaneKind::Operator { .. } => None,
        }
    }
}

/// A timer-controller entry and the lane entries it gates within its window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerGate {
    pub timer: String,
    pub lane: String,
    pub gated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScheduleTable {
    pub hyperperiod_stu: u64,
    pub lanes: Vec<Lane>,
    pub entries: Vec<ScheduleEntry>,
    pub synchros: Vec<SynchroEdge>,
    /// Block name to operator name.
    pub placement: BTreeMap<String, String>,
    /// Declared (or inherited) period of each periodic block.
    #[serde(default)]
    pub periods: BTreeMap<String, u64>,
    #[serde(default)]
    pub timers: Vec<TimerGate>,
}

impl ScheduleTable {
    pub fn lane(&self, name: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.name == name)
    }

    pub fn entry(&self, id: &str) -> Option<&ScheduleEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Entries of one lane in table order.
    pub fn lane_entries<'a>(&'a self, lane: &'a str) -> impl Iterator<Item = &'a ScheduleEntry> + 'a {
        self.entries.iter().filter(move |e| e.lane == lane)
    }

    pub fn compute_entries(&self) -> impl Iterator<Item = &ScheduleEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Compute)
    }

    /// Latest end over compute and transfer entries.
    pub fn makespan(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, EntryKind::Compute | EntryKind::Send | EntryKind::Receive))
            .map(ScheduleEntry::end_stu)
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schedule tables always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
