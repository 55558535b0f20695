use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    pub name: String,
    pub op_type: String,
    pub gates: Vec<String>,
    pub clock_hz: f64,
    pub cycles_per_stu: u64,
}

impl Operator {
    pub fn new(name: impl Into<String>, op_type: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            op_type: op_type.into(),
            gates: Vec::new(),
            clock_hz: 1.0,
            cycles_per_stu: 1,
        }
    }

    pub fn with_gates(mut self, gates: &[&str]) -> Self {
        self.gates = gates.iter().map(|g| g.to_string()).collect();
        self
    }

    pub fn with_clock(mut self, clock_hz: f64, cycles_per_stu: u64) -> Self {
        self.clock_hz = clock_hz;
        self.cycles_per_stu = cycles_per_stu;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    SamPointToPoint,
    SamMultipoint,
    Ram,
}

impl MediumKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MediumKind::SamPointToPoint => "sam_ptp",
            MediumKind::SamMultipoint => "sam_multi",
            MediumKind::Ram => "ram",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "sam_ptp" => Some(MediumKind::SamPointToPoint),
            "sam_multi" => Some(MediumKind::SamMultipoint),
            "ram" => Some(MediumKind::Ram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GateRef {
    pub operator: String,
    pub gate: String,
}

impl GateRef {
    pub fn new(operator: impl Into<String>, gate: impl Into<String>) -> Self {
        Self {
            operator: operator.into(),
            gate: gate.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Medium {
    pub name: String,
    pub kind: MediumKind,
    pub broadcast: bool,
    pub attach: Vec<GateRef>,
    /// STU per unit of width, keyed by data type name.
    pub transfer_duration: BTreeMap<String, u64>,
}

impl Medium {
    pub fn new(name: impl Into<String>, kind: MediumKind) -> Self {
        Self {
            name: name.into(),
            kind,
            broadcast: false,
            attach: Vec::new(),
            transfer_duration: BTreeMap::new(),
        }
    }

    pub fn attach(mut self, operator: &str, gate: &str) -> Self {
        self.attach.push(GateRef::new(operator, gate));
        self
    }

    pub fn with_transfer(mut self, dtype: impl Into<String>, stu: u64) -> Self {
        self.transfer_duration.insert(dtype.into(), stu);
        self
    }

    pub fn with_broadcast(mut self, broadcast: bool) -> Self {
        self.broadcast = broadcast;
        self
    }

    pub fn connects(&self, operator: &str) -> bool {
        self.attach.iter().any(|g| g.operator == operator)
    }

    pub fn gate_of(&self, operator: &str) -> Option<&str> {
        self.attach
            .iter()
            .find(|g| g.operator == operator)
            .map(|g| g.gate.as_str())
    }

    /// Attached operators in attachment order, without repeats.
    pub fn members(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in &self.attach {
            if !out.contains(&g.operator) {
                out.push(g.operator.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArchitectureGraph {
    pub name: String,
    pub operators: Vec<Operator>,
    pub media: Vec<Medium>,
}

impl ArchitectureGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_operator(mut self, op: Operator) -> Self {
        self.operators.push(op);
        self
    }

    pub fn with_medium(mut self, medium: Medium) -> Self {
        self.media.push(medium);
        self
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn medium(&self, name: &str) -> Option<&Medium> {
        self.media.iter().find(|m| m.name == name)
    }

    /// Media attached to both operators, sorted by name.
    pub fn shared_media(&self, a: &str, b: &str) -> Vec<&Medium> {
        let mut out: Vec<&Medium> = self
            .media
            .iter()
            .filter(|m| m.connects(a) && m.connects(b))
            .collect();
        out.sort_by(|x, y| x.name.cmp(&y.name));
        out
    }
}
