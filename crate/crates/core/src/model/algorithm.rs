use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Block name used inside a graph to refer to the graph's own boundary ports.
pub const SELF_BLOCK: &str = "self";

/// Types every model may use without declaring them.
pub const BUILTIN_TYPES: &[(&str, u32)] = &[
    ("bool", 1),
    ("int8", 1),
    ("uint8", 1),
    ("int16", 2),
    ("uint16", 2),
    ("int32", 4),
    ("uint32", 4),
    ("float", 4),
    ("double", 8),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataType {
    pub name: String,
    pub size_bytes: u32,
}

impl DataType {
    pub fn new(name: impl Into<String>, size_bytes: u32) -> Self {
        Self {
            name: name.into(),
            size_bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn sigil(self) -> char {
        match self {
            Direction::Input => '?',
            Direction::Output => '!',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub dtype: String,
    pub width: u32,
    /// Declaration rank, 1-based.
    pub rank: u32,
}

impl Port {
    pub fn input(name: impl Into<String>, dtype: impl Into<String>, width: u32, rank: u32) -> Self {
        Self {
            name: name.into(),
            direction: Direction::Input,
            dtype: dtype.into(),
            width,
            rank,
        }
    }

    pub fn output(name: impl Into<String>, dtype: impl Into<String>, width: u32, rank: u32) -> Self {
        Self {
            name: name.into(),
            direction: Direction::Output,
            dtype: dtype.into(),
            width,
            rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Sensor,
    Actuator,
    Function,
    Constant,
    Delay,
    Super,
}

impl BlockKind {
    pub const ALL: [BlockKind; 6] = [
        BlockKind::Sensor,
        BlockKind::Actuator,
        BlockKind::Function,
        BlockKind::Constant,
        BlockKind::Delay,
        BlockKind::Super,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            BlockKind::Sensor => "sensor",
            BlockKind::Actuator => "actuator",
            BlockKind::Function => "function",
            BlockKind::Constant => "constant",
            BlockKind::Delay => "delay",
            BlockKind::Super => "super",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub ports: Vec<Port>,
    pub period_stu: Option<u64>,
    /// Duration per operator type. An entry keyed by an operator name
    /// overrides the entry for that operator's type.
    pub durations: BTreeMap<String, u64>,
    pub constraint: Option<String>,
    pub params: BTreeMap<String, f64>,
    /// Automaton-state port of a conditioned super block. Documentation only.
    pub condition: Option<String>,
    pub body: Option<Box<AlgorithmGraph>>,
}

impl Block {
    pub fn new(name: impl Into<String>, kind: BlockKind) -> Self {
        Self {
            name: name.into(),
            kind,
            ports: Vec::new(),
            period_stu: None,
            durations: BTreeMap::new(),
            constraint: None,
            params: BTreeMap::new(),
            condition: None,
            body: None,
        }
    }

    pub fn with_port(mut self, port: Port) -> Self {
        self.ports.push(port);
        self
    }

    pub fn with_period(mut self, period: u64) -> Self {
        self.period_stu = Some(period);
        self
    }

    pub fn with_duration(mut self, op_type: impl Into<String>, stu: u64) -> Self {
        self.durations.insert(op_type.into(), stu);
        self
    }

    pub fn with_constraint(mut self, operator: impl Into<String>) -> Self {
        self.constraint = Some(operator.into());
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn with_body(mut self, body: AlgorithmGraph) -> Self {
        self.body = Some(Box::new(body));
        self
    }

    pub fn port(&self, name: &str, direction: Direction) -> Option<&Port> {
        self.ports
            .iter()
            .find(|p| p.name == name && p.direction == direction)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    /// Duration on an operator: the per-instance entry wins over the type entry.
    pub fn duration_on(&self, operator: &str, op_type: &str) -> Option<u64> {
        self.durations
            .get(operator)
            .or_else(|| self.durations.get(op_type))
            .copied()
    }

    /// Timer-controller blocks gate the rest of their operator's lane.
    pub fn is_timer(&self) -> bool {
        self.params.get("timer").is_some_and(|v| *v != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub block: String,
    pub port: String,
}

impl PortRef {
    pub fn new(block: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            block: block.into(),
            port: port.into(),
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.block == SELF_BLOCK
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependency {
    /// Strong precedence: data flows from an output port to an input port.
    Data { from: PortRef, to: PortRef },
    /// Pure ordering between two blocks.
    Precedence { from: String, to: String },
}

impl Dependency {
    pub fn data(from: PortRef, to: PortRef) -> Self {
        Dependency::Data { from, to }
    }

    pub fn precedence(from: impl Into<String>, to: impl Into<String>) -> Self {
        Dependency::Precedence {
            from: from.into(),
            to: to.into(),
        }
    }

    pub fn from_block(&self) -> &str {
        match self {
            Dependency::Data { from, .. } => &from.block,
            Dependency::Precedence { from, .. } => from,
        }
    }

    pub fn to_block(&self) -> &str {
        match self {
            Dependency::Data { to, .. } => &to.block,
            Dependency::Precedence { to, .. } => to,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgorithmGraph {
    pub name: String,
    pub period_stu: Option<u64>,
    /// Boundary ports of the root graph. Super-block bodies keep theirs on the block.
    pub ports: Vec<Port>,
    pub dtypes: Vec<DataType>,
    pub blocks: Vec<Block>,
    pub deps: Vec<Dependency>,
}

impl AlgorithmGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_block(mut self, block: Block) -> Self {
        self.blocks.push(block);
        self
    }

    pub fn with_dep(mut self, dep: Dependency) -> Self {
        self.deps.push(dep);
        self
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    /// Resolves a declared or builtin data type.
    pub fn dtype(&self, name: &str) -> Option<DataType> {
        self.dtypes
            .iter()
            .find(|d| d.name == name)
            .cloned()
            .or_else(|| builtin_type(name))
    }

    pub fn has_super_blocks(&self) -> bool {
        self.blocks.iter().any(|b| b.kind == BlockKind::Super)
    }

    /// Sorts dependencies into canonical order, recursively.
    pub fn canonicalize(&mut self) {
        self.deps.sort();
        self.deps.dedup();
        for block in &mut self.blocks {
            if let Some(body) = block.body.as_mut() {
                body.canonicalize();
            }
        }
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Data dependency feeding the given input port, if any.
    pub fn feed_of(&self, block: &str, port: &str) -> Option<&PortRef> {
        self.deps.iter().find_map(|d| match d {
            Dependency::Data { from, to } if to.block == block && to.port == port => Some(from),
            _ => None,
        })
    }

    /// Effective period of a block: its own, else the graph's.
    pub fn period_of(&self, block: &Block) -> Option<u64> {
        block.period_stu.or(self.period_stu)
    }
}

pub fn builtin_type(name: &str) -> Option<DataType> {
    BUILTIN_TYPES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, s)| DataType::new(*n, *s))
}
