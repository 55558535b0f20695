use std::collections::BTreeMap;
use std::fmt::{Display, Write};

use crate::model::{AlgorithmGraph, ArchitectureGraph, Block, BlockKind, Dependency, Port};

/// Canonical text of an algorithm graph: blocks in declaration order,
/// dependencies sorted. Reparsing yields `g.canonical()`.
pub fn print_algorithm(g: &AlgorithmGraph) -> String {
    let mut out = String::new();
    out.push_str("def algorithm ");
    out.push_str(&g.name);
    if let Some(p) = g.period_stu {
        let _ = write!(out, " period {p}");
    }
    out.push_str(" :\n");
    for dt in &g.dtypes {
        let _ = writeln!(out, "typedef {} {};", dt.name, dt.size_bytes);
    }
    for p in &g.ports {
        let _ = writeln!(out, "{};", port(p));
    }
    body(&mut out, g, 0);
    out.push_str("end;\n");
    out
}

fn port(p: &Port) -> String {
    format!("{} {}[{}] {} {}", p.direction.sigil(), p.dtype, p.width, p.name, p.rank)
}

fn body(out: &mut String, g: &AlgorithmGraph, depth: usize) {
    let pad = "    ".repeat(depth);
    for b in &g.blocks {
        out.push_str(&pad);
        block(out, b, depth);
    }
    let mut deps = g.deps.clone();
    deps.sort();
    for d in &deps {
        out.push_str(&pad);
        match d {
            Dependency::Data { from, to } => {
                let _ = writeln!(out, "{}.{} -> {}.{};", from.block, from.port, to.block, to.port);
            }
            Dependency::Precedence { from, to } => {
                let _ = writeln!(out, "{from} ~> {to};");
            }
        }
    }
}

fn assignments<T: Display>(map: &BTreeMap<String, T>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn block(out: &mut String, b: &Block, depth: usize) {
    let _ = write!(out, "{} {} :", b.kind.keyword(), b.name);
    if !b.ports.is_empty() {
        let ports: Vec<String> = b.ports.iter().map(port).collect();
        let _ = write!(out, " {}", ports.join(", "));
    }
    if let Some(p) = b.period_stu {
        let _ = write!(out, " period {p}");
    }
    if let Some(c) = &b.constraint {
        let _ = write!(out, " constraint {c}");
    }
    if !b.durations.is_empty() {
        let _ = write!(out, " duration {}", assignments(&b.durations));
    }
    if !b.params.is_empty() {
        let _ = write!(out, " param {}", assignments(&b.params));
    }
    match (&b.kind, &b.body) {
        (BlockKind::Super, Some(inner)) => {
            if let Some(c) = &b.condition {
                let _ = write!(out, " condition {c}");
            }
            out.push_str(" {\n");
            body(out, inner, depth + 1);
            out.push_str(&"    ".repeat(depth));
            out.push_str("}\n");
        }
        _ => out.push_str(";\n"),
    }
}

pub fn print_architecture(a: &ArchitectureGraph) -> String {
    let mut out = format!("def architecture {} :\n", a.name);
    for op in &a.operators {
        let _ = write!(
            out,
            "operator {} : type {} clock {} stu {}",
            op.name, op.op_type, op.clock_hz, op.cycles_per_stu
        );
        if !op.gates.is_empty() {
            let _ = write!(out, " gates {}", op.gates.join(","));
        }
        out.push_str(";\n");
    }
    for m in &a.media {
        let _ = write!(out, "medium {} : kind {}", m.name, m.kind.keyword());
        if m.broadcast {
            out.push_str(" broadcast");
        }
        let attach: Vec<String> = m
            .attach
            .iter()
            .map(|g| format!("{}.{}", g.operator, g.gate))
            .collect();
        let _ = write!(out, " attach {}", attach.join(","));
        if !m.transfer_duration.is_empty() {
            let _ = write!(out, " duration {}", assignments(&m.transfer_duration));
        }
        out.push_str(";\n");
    }
    out.push_str("end;\n");
    out
}
