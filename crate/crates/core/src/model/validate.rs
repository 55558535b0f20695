use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::algorithm::{AlgorithmGraph, Block, BlockKind, Dependency, Direction, Port, SELF_BLOCK};
use super::architecture::{ArchitectureGraph, MediumKind};
use crate::report::{Code, ValidationReport};

pub fn validate_algorithm(g: &AlgorithmGraph) -> ValidationReport {
    let mut report = ValidationReport::new();
    check_dtypes(g, &mut report);
    check_ports(g, &g.ports, "", "self", &mut report);
    check_graph(g, g, &g.ports, "", g.has_super_blocks(), &mut report);
    report
}

fn check_dtypes(g: &AlgorithmGraph, report: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for dt in &g.dtypes {
        if !seen.insert(dt.name.as_str()) {
            report.push(Code::DuplicateName, &dt.name, "data type declared twice");
        }
        if dt.size_bytes == 0 {
            report.push(Code::UnknownType, &dt.name, "data type size must be at least 1 byte");
        }
    }
}

/// Path-qualified names (`a/b`) only come out of flattening, so they are
/// rejected in graphs that still contain super blocks.
fn bad_name(name: &str, hierarchical: bool) -> bool {
    name.split('/').any(|seg| seg.is_empty() || seg == SELF_BLOCK) || (hierarchical && name.contains('/'))
}

fn check_ports(
    types: &AlgorithmGraph,
    ports: &[Port],
    prefix: &str,
    owner: &str,
    report: &mut ValidationReport,
) {
    let mut seen = BTreeSet::new();
    for p in ports {
        let subject = format!("{prefix}{owner}.{}", p.name);
        if !seen.insert((p.name.as_str(), p.direction)) {
            report.push(Code::DuplicateName, &subject, "port declared twice");
        }
        if p.name.is_empty() || p.name.contains('/') {
            report.push(Code::BadName, &subject, "port names must be non-empty and free of '/'");
        }
        if types.dtype(&p.dtype).is_none() {
            report.push(
                Code::UnknownType,
                &subject,
                format!("unknown data type `{}`", p.dtype),
            );
        }
        if p.width == 0 {
            report.push(Code::WidthMismatch, &subject, "port width must be at least 1");
        }
    }
}

/// Checks one graph level. `types` is the root graph that owns type declarations,
/// `boundary` the ports visible through `self`.
fn check_graph(
    types: &AlgorithmGraph,
    g: &AlgorithmGraph,
    boundary: &[Port],
    prefix: &str,
    hierarchical: bool,
    report: &mut ValidationReport,
) {
    let mut names = BTreeSet::new();
    for b in &g.blocks {
        let subject = format!("{prefix}{}", b.name);
        if !names.insert(b.name.as_str()) {
            report.push(Code::DuplicateName, &subject, "block declared twice");
        }
        if bad_name(&b.name, hierarchical) {
            report.push(Code::BadName, &subject, "block names must be non-empty, unqualified and not `self`");
        }
        check_ports(types, &b.ports, prefix, &b.name, report);
        check_block_shape(b, &subject, report);
        if let Some(body) = &b.body {
            if b.kind == BlockKind::Super {
                check_graph(types, body, &b.ports, &format!("{subject}/"), true, report);
            }
        }
    }

    let mut feeds: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for dep in &g.deps {
        match dep {
            Dependency::Data { from, to } => {
                let subject = format!(
                    "{prefix}{}.{} -> {}.{}",
                    from.block, from.port, to.block, to.port
                );
                let src = resolve(g, boundary, &from.block, &from.port, true);
                let dst = resolve(g, boundary, &to.block, &to.port, false);
                match (src, dst) {
                    (Resolved::Missing, _) | (_, Resolved::Missing) => {
                        report.push(Code::DanglingRef, &subject, "endpoint does not resolve");
                    }
                    (Resolved::WrongDirection, _) | (_, Resolved::WrongDirection) => {
                        report.push(
                            Code::BadDirection,
                            &subject,
                            "data must flow from an output port to an input port",
                        );
                    }
                    (Resolved::Port(a), Resolved::Port(b)) => {
                        if a.dtype != b.dtype {
                            report.push(
                                Code::TypeMismatch,
                                &subject,
                                format!("{} feeds {}", a.dtype, b.dtype),
                            );
                        } else if a.width != b.width {
                            report.push(
                                Code::WidthMismatch,
                                &subject,
                                format!("width {} feeds width {}", a.width, b.width),
                            );
                        }
                        *feeds.entry((&to.block, &to.port)).or_default() += 1;
                    }
                }
            }
            Dependency::Precedence { from, to } => {
                let subject = format!("{prefix}{from} ~> {to}");
                if g.block(from).is_none() || g.block(to).is_none() {
                    report.push(Code::DanglingRef, &subject, "endpoint block does not exist");
                }
            }
        }
    }
    for ((block, port), n) in feeds {
        if n > 1 {
            report.push(
                Code::MultipleFeed,
                format!("{prefix}{block}.{port}"),
                format!("{n} data dependencies feed one input"),
            );
        }
    }

    for cycle in cycles(g) {
        report.push(
            Code::Cycle,
            format!("{prefix}{}", cycle.join(",")),
            "blocks form a dependency cycle",
        );
    }
}

fn check_block_shape(b: &Block, subject: &str, report: &mut ValidationReport) {
    let inputs = b.inputs().count();
    let outputs = b.outputs().count();
    match b.kind {
        BlockKind::Sensor | BlockKind::Constant if inputs > 0 => {
            report.push(Code::SensorInput, subject, "sensor and constant blocks take no data input");
        }
        BlockKind::Actuator if outputs > 0 => {
            report.push(Code::ActuatorOutput, subject, "actuator blocks produce no data output");
        }
        BlockKind::Delay => {
            let ok = inputs == 1 && outputs == 1 && {
                let i = b.inputs().next().unwrap();
                let o = b.outputs().next().unwrap();
                i.dtype == o.dtype && i.width == o.width
            };
            if !ok {
                report.push(
                    Code::DelayShape,
                    subject,
                    "delay blocks need one input and one output of identical type and width",
                );
            }
        }
        _ => {}
    }
    if (b.kind == BlockKind::Super) != b.body.is_some() {
        report.push(Code::SuperBody, subject, "a body is present exactly on super blocks");
    }
}

enum Resolved<'a> {
    Port(&'a Port),
    Missing,
    WrongDirection,
}

/// Looks up a dependency endpoint. Boundary ports flip direction: a graph input
/// acts as a source inside the graph.
fn resolve<'a>(
    g: &'a AlgorithmGraph,
    boundary: &'a [Port],
    block: &str,
    port: &str,
    is_source: bool,
) -> Resolved<'a> {
    let (ports, want): (&[Port], Direction) = if block == SELF_BLOCK {
        let d = if is_source { Direction::Input } else { Direction::Output };
        (boundary, d)
    } else {
        match g.block(block) {
            Some(b) => {
                let d = if is_source { Direction::Output } else { Direction::Input };
                (&b.ports, d)
            }
            None => return Resolved::Missing,
        }
    };
    if let Some(p) = ports.iter().find(|p| p.name == port && p.direction == want) {
        Resolved::Port(p)
    } else if ports.iter().any(|p| p.name == port) {
        Resolved::WrongDirection
    } else {
        Resolved::Missing
    }
}

/// Whether a dependency belongs to the intra-repetition order. Data entering a
/// delay block is carried to the next repetition instead.
pub fn is_intra(g: &AlgorithmGraph, dep: &Dependency) -> bool {
    match dep {
        Dependency::Data { to, .. } => g
            .block(&to.block)
            .is_none_or(|b| b.kind != BlockKind::Delay),
        Dependency::Precedence { .. } => true,
    }
}

/// Non-trivial strongly connected components of the intra-repetition block graph.
pub fn cycles(g: &AlgorithmGraph) -> Vec<Vec<String>> {
    let mut graph = DiGraph::<&str, ()>::new();
    let mut index = HashMap::new();
    for b in &g.blocks {
        index.entry(b.name.as_str()).or_insert_with(|| graph.add_node(&b.name));
    }
    let mut self_loops = BTreeSet::new();
    for dep in &g.deps {
        if !is_intra(g, dep) {
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(dep.from_block()), index.get(dep.to_block())) else {
            continue;
        };
        if a == b {
            self_loops.insert(a);
        }
        graph.update_edge(a, b, ());
    }
    let mut out: Vec<Vec<String>> = tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || self_loops.contains(&scc[0]))
        .map(|scc| {
            let mut names: Vec<String> = scc.iter().map(|n| graph[*n].to_string()).collect();
            names.sort();
            names
        })
        .collect();
    out.sort();
    out
}

pub fn validate_architecture(a: &ArchitectureGraph) -> ValidationReport {
    let mut report = ValidationReport::new();
    let mut names = BTreeSet::new();
    for op in &a.operators {
        if !names.insert(op.name.as_str()) {
            report.push(Code::DuplicateName, &op.name, "operator declared twice");
        }
        if bad_name(&op.name, true) {
            report.push(Code::BadName, &op.name, "operator names must be non-empty and free of '/'");
        }
        let mut gates = BTreeSet::new();
        for g in &op.gates {
            if !gates.insert(g.as_str()) {
                report.push(Code::DuplicateName, format!("{}.{g}", op.name), "gate declared twice");
            }
        }
        if !(op.clock_hz.is_finite() && op.clock_hz > 0.0) || op.cycles_per_stu == 0 {
            report.push(
                Code::BadClock,
                &op.name,
                "clock and cycles per STU must be positive",
            );
        }
    }
    let mut media = BTreeSet::new();
    let mut used: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for m in &a.media {
        if !media.insert(m.name.as_str()) || names.contains(m.name.as_str()) {
            report.push(Code::DuplicateName, &m.name, "medium name already in use");
        }
        if bad_name(&m.name, true) {
            report.push(Code::BadName, &m.name, "medium names must be non-empty and free of '/'");
        }
        for g in &m.attach {
            let subject = format!("{}.{}", g.operator, g.gate);
            let resolved = a
                .operator(&g.operator)
                .is_some_and(|op| op.gates.contains(&g.gate));
            if !resolved {
                report.push(
                    Code::UnresolvedGate,
                    &subject,
                    format!("medium {} attaches an unknown gate", m.name),
                );
                continue;
            }
            if let Some(first) = used.insert((&g.operator, &g.gate), &m.name) {
                report.push(
                    Code::GateReuse,
                    &subject,
                    format!("gate attached to both {first} and {}", m.name),
                );
            }
        }
        if m.kind == MediumKind::SamPointToPoint && m.members().len() != 2 {
            report.push(
                Code::Arity,
                &m.name,
                format!("point-to-point medium attaches {} operators", m.members().len()),
            );
        }
    }
    report
}
