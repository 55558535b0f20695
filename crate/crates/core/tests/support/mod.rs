//! Shared fixtures: shipped models, random instances and an exhaustive
//! scheduling oracle.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use adequa::adequation::{
    adequate, insert_waits, EntryKind, Lane, LaneKind, Payload, ScheduleEntry, ScheduleTable, SynchroEdge,
    SynchroScope,
};
use adequa::parse::{parse_algorithm, parse_architecture};
use adequa::{flatten, AlgorithmGraph, ArchitectureGraph, Block, BlockKind, Dependency, Medium, MediumKind, Operator, Port, PortRef};
use proptest::prelude::*;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

pub fn read_model(name: &str) -> String {
    std::fs::read_to_string(model_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn algorithm(name: &str) -> AlgorithmGraph {
    flatten(&parse_algorithm(&read_model(name)).expect("algorithm parses").model).expect("flattens")
}

pub fn architecture(name: &str) -> ArchitectureGraph {
    parse_architecture(&read_model(name)).expect("architecture parses").model
}

pub struct Example {
    pub flat: AlgorithmGraph,
    pub arch: ArchitectureGraph,
    /// Adequation result before wait insertion.
    pub raw: ScheduleTable,
    pub table: ScheduleTable,
}

pub fn example(stem: &str) -> Example {
    let flat = algorithm(&format!("{stem}.adm"));
    let arch = architecture(&format!("{stem}.arm"));
    let raw = adequate(&flat, &arch).expect("adequation succeeds");
    let table = insert_waits(&raw, &flat).expect("waits fit");
    Example { flat, arch, raw, table }
}

pub const OP_TYPE: &str = "T";
pub const BASE_PERIOD: u64 = 256;

#[derive(Debug, Clone)]
pub struct Instance {
    pub flat: AlgorithmGraph,
    pub arch: ArchitectureGraph,
}

impl Instance {
    /// Every block runs once per hyperperiod: no periods, or one shared period.
    pub fn single_rate(&self) -> bool {
        let first = self.flat.blocks.first().and_then(|b| b.period_stu);
        self.flat.blocks.iter().all(|b| b.period_stu == first)
    }
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    None,
    Data,
    Precedence,
}

/// Random DAG on `1..=max_blocks` function blocks over `1..=max_ops`
/// identical operators joined by one bus. Edges only point from lower to
/// higher block index. With `multirate`, block periods are drawn from
/// `BASE_PERIOD · {1, 2, 4}`.
pub fn instance(max_blocks: usize, max_ops: usize, multirate: bool) -> impl Strategy<Value = Instance> {
    (1..=max_blocks, 1..=max_ops).prop_flat_map(move |(n, m)| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            Just(m),
            prop::collection::vec(prop_oneof![2 => Just(Edge::None), 2 => Just(Edge::Data), 1 => Just(Edge::Precedence)], pairs),
            prop::collection::vec(1..=5u64, n),
            prop::collection::vec(0..3u32, n),
            prop::collection::vec(0..m + 4, n),
            1..=3u64,
            any::<bool>(),
        )
            .prop_map(move |(n, m, edges, durs, exps, cons, tdur, second_medium)| {
                build(n, m, &edges, &durs, multirate.then_some(&exps[..]), &cons, tdur, second_medium)
            })
    })
}

#[allow(clippy::too_many_arguments)]
fn build(
    n: usize,
    m: usize,
    edges: &[Edge],
    durs: &[u64],
    exps: Option<&[u32]>,
    cons: &[usize],
    tdur: u64,
    second_medium: bool,
) -> Instance {
    let mut blocks: Vec<Block> = (0..n)
        .map(|i| {
            let mut b = Block::new(format!("b{i}"), BlockKind::Function)
                .with_port(Port::output("o", "uint8", 1, 1))
                .with_duration(OP_TYPE, durs[i]);
            if let Some(exps) = exps {
                b = b.with_period(BASE_PERIOD << exps[i]);
            }
            if cons[i] < m {
                b = b.with_constraint(format!("p{}", cons[i]));
            }
            b
        })
        .collect();
    let mut deps = Vec::new();
    let mut k = 0;
    for to in 0..n {
        let mut rank = 1;
        for from in 0..to {
            let e = edges[k];
            k += 1;
            match e {
                Edge::None => {}
                Edge::Data => {
                    let port = format!("i{from}");
                    blocks[to] = blocks[to].clone().with_port(Port::input(&port, "uint8", 1, rank));
                    rank += 1;
                    deps.push(Dependency::data(
                        PortRef::new(format!("b{from}"), "o"),
                        PortRef::new(format!("b{to}"), port),
                    ));
                }
                Edge::Precedence => deps.push(Dependency::precedence(format!("b{from}"), format!("b{to}"))),
            }
        }
    }
    let mut flat = AlgorithmGraph::new("rand");
    for b in blocks {
        flat = flat.with_block(b);
    }
    for d in deps {
        flat = flat.with_dep(d);
    }
    let mut arch = ArchitectureGraph::new("rand");
    for i in 0..m {
        arch = arch.with_operator(Operator::new(format!("p{i}"), OP_TYPE).with_gates(&["g0", "g1"]));
    }
    if m > 1 {
        let mut bus = Medium::new("bus", MediumKind::SamMultipoint).with_transfer("uint8", tdur);
        for i in 0..m {
            bus = bus.attach(&format!("p{i}"), "g0");
        }
        arch = arch.with_medium(bus);
        if second_medium {
            // Sorts before `bus`, so p0 <-> p1 traffic must use it.
            arch = arch.with_medium(
                Medium::new("link", MediumKind::SamPointToPoint)
                    .attach("p0", "g1")
                    .attach("p1", "g1")
                    .with_transfer("uint8", tdur + 1),
            );
        }
    }
    Instance { flat, arch }
}

#[derive(Debug, Clone)]
struct Pred {
    block: usize,
    /// (from_port, to_port, dtype, width) for data links.
    data: Option<(String, String, String, u32)>,
}

fn preds_of(flat: &AlgorithmGraph) -> Vec<Vec<Pred>> {
    let index: HashMap<&str, usize> = flat.blocks.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect();
    let mut preds = vec![Vec::new(); flat.blocks.len()];
    for d in &flat.deps {
        let (a, b) = (index[d.from_block()], index[d.to_block()]);
        let data = match d {
            Dependency::Data { from, to } => {
                let port = flat.blocks[a].outputs().find(|p| p.name == from.port).expect("port");
                Some((from.port.clone(), to.port.clone(), port.dtype.clone(), port.width))
            }
            Dependency::Precedence { .. } => None,
        };
        preds[b].push(Pred { block: a, data });
    }
    preds
}

#[derive(Clone)]
struct Partial {
    op_free: Vec<u64>,
    medium_free: BTreeMap<String, u64>,
    placed: Vec<Option<(usize, u64, u64)>>,
    /// (medium, start, end, producer, consumer, pred index)
    transfers: Vec<(String, u64, u64, usize, usize, usize)>,
    makespan: u64,
}

struct Search<'a> {
    flat: &'a AlgorithmGraph,
    arch: &'a ArchitectureGraph,
    preds: Vec<Vec<Pred>>,
    best: Option<(u64, Partial)>,
}

impl Search<'_> {
    fn duration(&self, b: usize, op: usize) -> Option<u64> {
        let block = &self.flat.blocks[b];
        let o = &self.arch.operators[op];
        if block.constraint.as_ref().is_some_and(|c| *c != o.name) {
            return None;
        }
        block.duration_on(&o.name, &o.op_type)
    }

    /// Places `b` on `op` with the scheduler's timing rules: no insertion
    /// into idle gaps, cross-operator data on the first shared medium.
    fn place(&self, s: &Partial, b: usize, op: usize) -> Option<Partial> {
        let dur = self.duration(b, op)?;
        let mut s = s.clone();
        let mut preds: Vec<(usize, &Pred)> = self.preds[b].iter().enumerate().collect();
        preds.sort_by_key(|(_, p)| (s.placed[p.block].expect("ready").2, p.block));
        let mut ready = 0;
        let to = &self.arch.operators[op].name;
        for (pi, p) in preds {
            let (pop, _, pend) = s.placed[p.block].expect("ready");
            let Some((_, _, dtype, width)) = &p.data else {
                ready = ready.max(pend);
                continue;
            };
            if pop == op {
                ready = ready.max(pend);
                continue;
            }
            let from = &self.arch.operators[pop].name;
            let medium = *self.arch.shared_media(from, to).first()?;
            let t = medium.transfer_duration[dtype] * u64::from(*width);
            let free = s.medium_free.get(&medium.name).copied().unwrap_or(0);
            let start = pend.max(free);
            s.medium_free.insert(medium.name.clone(), start + t);
            s.transfers.push((medium.name.clone(), start, start + t, p.block, b, pi));
            s.makespan = s.makespan.max(start + t);
            ready = ready.max(start + t);
        }
        let start = ready.max(s.op_free[op]);
        s.op_free[op] = start + dur;
        s.placed[b] = Some((op, start, start + dur));
        s.makespan = s.makespan.max(start + dur);
        Some(s)
    }

    fn dfs(&mut self, s: &Partial, left: usize) {
        if self.best.as_ref().is_some_and(|(m, _)| s.makespan >= *m) {
            return;
        }
        if left == 0 {
            self.best = Some((s.makespan, s.clone()));
            return;
        }
        for b in 0..self.flat.blocks.len() {
            if s.placed[b].is_some() || self.preds[b].iter().any(|p| s.placed[p.block].is_none()) {
                continue;
            }
            for op in 0..self.arch.operators.len() {
                if let Some(next) = self.place(s, b, op) {
                    self.dfs(&next, left - 1);
                }
            }
        }
    }
}

/// Minimum makespan over every topological order and every placement of a
/// single-rate instance, together with the table realizing it.
pub fn brute_force(flat: &AlgorithmGraph, arch: &ArchitectureGraph) -> Option<(u64, ScheduleTable)> {
    let n = flat.blocks.len();
    let mut search = Search {
        flat,
        arch,
        preds: preds_of(flat),
        best: None,
    };
    let start = Partial {
        op_free: vec![0; arch.operators.len()],
        medium_free: BTreeMap::new(),
        placed: vec![None; n],
        transfers: Vec::new(),
        makespan: 0,
    };
    search.dfs(&start, n);
    let (makespan, best) = search.best.take()?;
    Some((makespan, to_table(&search, &best)))
}

fn to_table(search: &Search<'_>, s: &Partial) -> ScheduleTable {
    let (flat, arch) = (search.flat, search.arch);
    let mut t = ScheduleTable {
        hyperperiod_stu: flat.blocks.first().and_then(|b| b.period_stu).unwrap_or(s.makespan).max(1),
        lanes: arch
            .operators
            .iter()
            .map(|o| Lane {
                name: o.name.clone(),
                kind: LaneKind::Operator {
                    op_type: o.op_type.clone(),
                },
            })
            .chain(arch.media.iter().map(|m| Lane {
                name: m.name.clone(),
                kind: LaneKind::Medium {
                    medium_kind: m.kind,
                    broadcast: m.broadcast,
                    attach: m.attach.clone(),
                },
            }))
            .collect(),
        ..ScheduleTable::default()
    };
    let sync = |t: &mut ScheduleTable, from: &str, to: &str| {
        let e = SynchroEdge {
            from: from.into(),
            to: to.into(),
            scope: SynchroScope::Intra,
        };
        if !t.synchros.contains(&e) {
            t.synchros.push(e);
        }
    };
    for (b, placed) in s.placed.iter().enumerate() {
        let (op, start, end) = placed.expect("complete");
        let name = flat.blocks[b].name.clone();
        let lane = arch.operators[op].name.clone();
        t.placement.insert(name.clone(), lane.clone());
        t.entries.push(ScheduleEntry {
            id: name.clone(),
            lane,
            kind: EntryKind::Compute,
            block: Some(name.clone()),
            instance: 0,
            payload: None,
            start_stu: start,
            duration_stu: end - start,
        });
        for p in &search.preds[b] {
            let (pop, _, _) = s.placed[p.block].expect("complete");
            if pop != op && p.data.is_none() {
                sync(&mut t, &flat.blocks[p.block].name, &name);
            }
        }
    }
    for (i, (medium, start, end, producer, consumer, pi)) in s.transfers.iter().enumerate() {
        let id = format!("x{i}");
        let (from_port, to_port, dtype, width) = search.preds[*consumer][*pi].data.clone().expect("data link");
        let payload = Payload {
            dtype,
            width,
            producer: flat.blocks[*producer].name.clone(),
            from_port,
            consumer: flat.blocks[*consumer].name.clone(),
            to_port,
        };
        for kind in [EntryKind::Send, EntryKind::Receive] {
            t.entries.push(ScheduleEntry {
                id: id.clone(),
                lane: medium.clone(),
                kind,
                block: None,
                instance: 0,
                payload: Some(payload.clone()),
                start_stu: *start,
                duration_stu: end - start,
            });
        }
        sync(&mut t, &payload.producer, &id);
        sync(&mut t, &id, &payload.consumer);
    }
    t.entries.sort_by_key(|e| e.start_stu);
    t
}

/// Longest dependency chain using each block's fastest operator; ignores
/// communication, so no feasible schedule can beat it.
pub fn critical_path(flat: &AlgorithmGraph, arch: &ArchitectureGraph) -> u64 {
    let preds = preds_of(flat);
    let mut finish = vec![0u64; flat.blocks.len()];
    // Blocks of generated instances are already in topological order.
    for b in 0..flat.blocks.len() {
        let fastest = arch
            .operators
            .iter()
            .filter(|o| flat.blocks[b].constraint.as_ref().is_none_or(|c| *c == o.name))
            .filter_map(|o| flat.blocks[b].duration_on(&o.name, &o.op_type))
            .min()
            .unwrap_or(0);
        let ready = preds[b].iter().map(|p| finish[p.block]).max().unwrap_or(0);
        finish[b] = ready + fastest;
    }
    finish.into_iter().max().unwrap_or(0)
}

/// Sum of every block duration and of one transfer per cross-operator data
/// link, assuming the slowest medium.
pub fn serial_bound(flat: &AlgorithmGraph, arch: &ArchitectureGraph) -> u64 {
    let slowest = arch
        .media
        .iter()
        .flat_map(|m| m.transfer_duration.values())
        .max()
        .copied()
        .unwrap_or(0);
    let work: u64 = flat.blocks.iter().map(|b| b.durations.values().max().copied().unwrap_or(0)).sum();
    let links = flat.deps.iter().filter(|d| matches!(d, Dependency::Data { .. })).count() as u64;
    work + links * slowest
}

pub const FLOW_TYPES: [&str; 4] = ["uint8", "uint16", "double", "frame"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Sensor,
    Constant,
    Function,
    Actuator,
    Delay,
    Super,
}

#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub shape: Shape,
    pub flow: usize,
    pub width: u32,
    pub durations: Vec<(usize, u64)>,
    pub period: Option<u64>,
    pub constraint: Option<u8>,
    pub params: Vec<f64>,
}

fn block_spec() -> impl Strategy<Value = BlockSpec> {
    (
        prop_oneof![
            1 => Just(Shape::Sensor),
            1 => Just(Shape::Constant),
            3 => Just(Shape::Function),
            1 => Just(Shape::Actuator),
            1 => Just(Shape::Delay),
            1 => Just(Shape::Super),
        ],
        0..FLOW_TYPES.len(),
        1..=4u32,
        prop::collection::vec((0..2usize, 1..=20u64), 0..3),
        prop::option::of(prop::sample::select(vec![10u64, 20, 40, 80])),
        prop::option::of(0..4u8),
        prop::collection::vec(-1000.0..1000.0f64, 0..3),
    )
        .prop_map(|(shape, flow, width, durations, period, constraint, params)| BlockSpec {
            shape,
            flow,
            width,
            durations,
            period,
            constraint,
            params,
        })
}

/// Valid, possibly hierarchical algorithm graph. Super blocks wrap a single
/// function `f` wired to every boundary port. Edges go from lower to higher
/// block index; a delay takes exactly its first incoming data edge.
pub fn model(max_blocks: usize) -> impl Strategy<Value = AlgorithmGraph> {
    (1..=max_blocks)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(block_spec(), n),
                prop::collection::vec(0..6u8, n * (n - 1) / 2),
                prop::option::of(prop::sample::select(vec![20u64, 80])),
            )
        })
        .prop_map(|(specs, edges, period)| build_model(&specs, &edges, period))
}

pub fn build_model(specs: &[BlockSpec], edges: &[u8], period: Option<u64>) -> AlgorithmGraph {
    let n = specs.len();
    let mut shapes: Vec<Shape> = specs.iter().map(|s| s.shape).collect();
    // (from, to, data?)
    let mut links = Vec::new();
    let mut k = 0;
    for to in 0..n {
        for from in 0..to {
            match edges[k] {
                0 | 1 => links.push((from, to, true)),
                2 => links.push((from, to, false)),
                _ => {}
            }
            k += 1;
        }
    }
    // Repair shapes so every rule holds for the drawn edges.
    for i in 0..n {
        let ins = links.iter().filter(|l| l.1 == i && l.2).count();
        let outs = links.iter().filter(|l| l.0 == i && l.2).count();
        shapes[i] = match shapes[i] {
            Shape::Sensor | Shape::Constant if ins > 0 => Shape::Function,
            Shape::Actuator if outs > 0 => Shape::Function,
            Shape::Delay if ins == 0 => Shape::Function,
            s => s,
        };
    }
    for i in 0..n {
        if shapes[i] == Shape::Delay {
            let mut first = true;
            links.retain(|l| {
                if l.1 == i && l.2 {
                    std::mem::replace(&mut first, false)
                } else {
                    true
                }
            });
        }
    }
    // Output type of each block; a delay forwards the type it receives.
    let mut out_type: Vec<(&str, u32)> = Vec::with_capacity(n);
    for i in 0..n {
        let fed = links.iter().find(|l| l.1 == i && l.2).map(|l| out_type[l.0]);
        out_type.push(match (shapes[i], fed) {
            (Shape::Delay, Some(t)) => t,
            _ => (FLOW_TYPES[specs[i].flow], specs[i].width),
        });
    }
    let name = |i: usize| format!("b{i}");
    let mut g = AlgorithmGraph::new("gen");
    g.period_stu = period;
    g.dtypes.push(adequa::DataType::new("frame", 4));
    for (i, s) in specs.iter().enumerate() {
        let kind = match shapes[i] {
            Shape::Sensor => BlockKind::Sensor,
            Shape::Constant => BlockKind::Constant,
            Shape::Function => BlockKind::Function,
            Shape::Actuator => BlockKind::Actuator,
            Shape::Delay => BlockKind::Delay,
            Shape::Super => BlockKind::Super,
        };
        let mut inputs = Vec::new();
        for &(from, _, _) in links.iter().filter(|l| l.1 == i && l.2) {
            inputs.push((format!("i{from}"), out_type[from].0, out_type[from].1));
        }
        let mut b = Block::new(name(i), kind);
        let mut rank = 1;
        for (p, t, w) in &inputs {
            b = b.with_port(Port::input(p, *t, *w, rank));
            rank += 1;
        }
        let (out_t, out_w) = out_type[i];
        if shapes[i] != Shape::Actuator {
            b = b.with_port(Port::output("o", out_t, out_w, rank));
        }
        if shapes[i] == Shape::Super {
            let mut f = Block::new("f", BlockKind::Function);
            let mut body = AlgorithmGraph::new(name(i));
            for (r, (p, t, w)) in inputs.iter().enumerate() {
                f = f.with_port(Port::input(p, *t, *w, r as u32 + 1));
                body.deps.push(Dependency::data(PortRef::new("self", p), PortRef::new("f", p)));
            }
            f = f.with_port(Port::output("o", out_t, out_w, inputs.len() as u32 + 1));
            for &(t, d) in &s.durations {
                f = f.with_duration(["ATmega128", "U"][t], d);
            }
            body.deps.push(Dependency::data(PortRef::new("f", "o"), PortRef::new("self", "o")));
            body.blocks.push(f);
            b = b.with_body(body);
        } else {
            for &(t, d) in &s.durations {
                b = b.with_duration(["ATmega128", "U"][t], d);
            }
        }
        if let Some(p) = s.period {
            b = b.with_period(p);
        }
        if let Some(c) = s.constraint {
            b = b.with_constraint(format!("node{c}"));
        }
        for (j, v) in s.params.iter().enumerate() {
            b = b.with_param(format!("k{j}"), *v);
        }
        g.blocks.push(b);
    }
    for &(from, to, data) in &links {
        g.deps.push(if data {
            Dependency::data(PortRef::new(name(from), "o"), PortRef::new(name(to), format!("i{from}")))
        } else {
            Dependency::precedence(name(from), name(to))
        });
    }
    g
}

/// Operators `node0..node{n-1}` of types ATmega128/U with random media.
pub fn arch_model() -> impl Strategy<Value = ArchitectureGraph> {
    (
        1..=5usize,
        prop::collection::vec((0..3u8, any::<bool>(), prop::collection::vec(any::<bool>(), 5), 1..=9u64), 0..3),
        prop::collection::vec(1.0e3..2.0e7f64, 5),
    )
        .prop_map(|(n, media, clocks)| {
            let mut a = ArchitectureGraph::new("gen");
            for i in 0..n {
                a = a.with_operator(
                    Operator::new(format!("node{i}"), if i == 0 { "U" } else { "ATmega128" })
                        .with_gates(&["g0", "g1", "g2"])
                        .with_clock(clocks[i].round(), 1000),
                );
            }
            for (j, (kind, broadcast, members, d)) in media.into_iter().enumerate() {
                let mut picked: Vec<usize> = (0..n).filter(|&i| members[i]).collect();
                let kind = match kind {
                    0 => {
                        picked.truncate(2);
                        if picked.len() < 2 {
                            continue;
                        }
                        MediumKind::SamPointToPoint
                    }
                    _ if picked.is_empty() => continue,
                    1 => MediumKind::SamMultipoint,
                    _ => MediumKind::Ram,
                };
                let mut m = Medium::new(format!("m{j}"), kind)
                    .with_broadcast(broadcast)
                    .with_transfer("uint8", d)
                    .with_transfer("uint16", d + 1);
                for i in picked {
                    m = m.attach(&format!("node{i}"), &format!("g{j}"));
                }
                a = a.with_medium(m);
            }
            a
        })
}

/// Text that looks like model source: keywords, punctuation and numbers.
pub fn token_soup() -> impl Strategy<Value = String> {
    let atoms = prop::sample::select(vec![
        "def", "algorithm", "architecture", "diagram", "end", ";", ":", "?", "!", "[", "]", "{", "}", "->", "~>", ".",
        ",", "=", "super", "function", "sensor", "delay", "period", "duration", "constraint", "param", "typedef",
        "operator", "medium", "kind", "attach", "gates", "clock", "stu", "block", "link", "on", "uint8", "double",
        "x", "y", "self", "0", "1", "20", "1.5", "-3", "1e400", "#", "\n", " ", "\t", "é", "99999999999999999999999",
    ]);
    prop::collection::vec(atoms, 0..60).prop_map(|v| v.join(" "))
}

/// A printed generated model with one span replaced by printable junk.
pub fn mutated_model() -> impl Strategy<Value = String> {
    (model(6), any::<prop::sample::Index>(), 0..8usize, "[ -~]{0,4}").prop_map(|(g, cut, len, junk)| {
        let mut chars: Vec<char> = adequa::parse::print_algorithm(&g).chars().collect();
        let at = cut.index(chars.len().max(1)).min(chars.len());
        let end = (at + len).min(chars.len());
        chars.splice(at..end, junk.chars());
        chars.into_iter().collect()
    })
}

/// Arbitrary bytes, token soup and mutated models in equal parts.
pub fn fuzz_input() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..300).prop_map(|b| String::from_utf8_lossy(&b).into_owned()),
        token_soup(),
        mutated_model(),
    ]
}
