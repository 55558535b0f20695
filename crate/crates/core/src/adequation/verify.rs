use std::collections::{BTreeMap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::problem::{Link, Problem};
use super::table::{EntryKind, ScheduleEntry, ScheduleTable, SynchroScope};
use crate::model::{AlgorithmGraph, ArchitectureGraph};
use crate::report::{Code, ValidationReport};

/// Checks a schedule table against its flat graph and architecture.
pub fn verify_schedule(
    table: &ScheduleTable,
    flat: &AlgorithmGraph,
    arch: &ArchitectureGraph,
) -> ValidationReport {
    let mut r = ValidationReport::new();
    check_lanes(table, arch, &mut r);
    check_lane_order(table, &mut r);
    check_pairs(table, arch, &mut r);
    let h = table.hyperperiod_stu;
    for e in &table.entries {
        if e.end_stu() > h {
            r.push(
                Code::Period,
                &e.id,
                format!("ends at {} beyond the hyperperiod {h}", e.end_stu()),
            );
        }
    }
    match Problem::new(flat) {
        Ok(prob) => {
            if let Some(ph) = prob.hyperperiod {
                if ph != h {
                    r.push(Code::Period, "table", format!("hyperperiod {h} differs from the model's {ph}"));
                }
            }
            check_blocks(table, &prob, arch, &mut r);
            check_deps(table, &prob, &mut r);
        }
        Err(e) => r.push(Code::Period, &flat.name, e.to_string()),
    }
    check_synchros(table, &mut r);
    check_deadlock(table, &mut r);
    r
}

fn check_lanes(table: &ScheduleTable, arch: &ArchitectureGraph, r: &mut ValidationReport) {
    for e in &table.entries {
        let Some(lane) = table.lane(&e.lane) else {
            r.push(Code::UnknownLane, &e.id, format!("lane {} is not in the table", e.lane));
            continue;
        };
        let known = if lane.is_operator() {
            arch.operator(&lane.name).is_some()
        } else {
            arch.medium(&lane.name).is_some()
        };
        if !known {
            r.push(Code::UnknownLane, &e.id, format!("lane {} is not in the architecture", e.lane));
        }
        if lane.is_operator() == e.kind.is_transfer() {
            r.push(
                Code::LaneKind,
                &e.id,
                format!("{} entry on lane {}", e.kind.name(), e.lane),
            );
        }
    }
}

fn exclusive(e: &ScheduleEntry) -> bool {
    e.kind != EntryKind::TimerReserve
}

fn check_lane_order(table: &ScheduleTable, r: &mut ValidationReport) {
    for lane in &table.lanes {
        let entries: Vec<&ScheduleEntry> = table
            .lane_entries(&lane.name)
            .filter(|e| exclusive(e))
            .collect();
        for w in entries.windows(2) {
            if w[1].start_stu < w[0].start_stu {
                r.push(
                    Code::Order,
                    format!("{}:{}", lane.name, w[1].id),
                    format!("listed after {} but starts earlier", w[0].id),
                );
            }
        }
        let mut sorted = entries.clone();
        sorted.sort_by_key(|e| (e.start_stu, e.end_stu()));
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if b.start_stu >= a.end_stu() {
                    break;
                }
                if a.id == b.id && a.kind.is_transfer() {
                    continue;
                }
                if a.duration_stu == 0 || b.duration_stu == 0 {
                    continue;
                }
                r.push(
                    Code::LaneOverlap,
                    format!("{}:{}", lane.name, b.id),
                    format!("overlaps {}", a.id),
                );
            }
        }
    }
}

fn check_pairs(table: &ScheduleTable, arch: &ArchitectureGraph, r: &mut ValidationReport) {
    let mut groups: BTreeMap<&str, Vec<&ScheduleEntry>> = BTreeMap::new();
    for e in table.entries.iter().filter(|e| e.kind.is_transfer()) {
        groups.entry(&e.id).or_default().push(e);
    }
    for (id, group) in groups {
        let sends = group.iter().filter(|e| e.kind == EntryKind::Send).count();
        let recvs = group.len() - sends;
        let lane = &group[0].lane;
        let broadcast = arch.medium(lane).is_some_and(|m| m.broadcast);
        let same_slot = group
            .iter()
            .all(|e| e.lane == *lane && e.start_stu == group[0].start_stu && e.duration_stu == group[0].duration_stu);
        if sends != 1 || recvs == 0 || (!broadcast && recvs != 1) || !same_slot {
            r.push(
                Code::Pairing,
                id,
                format!("{sends} send and {recvs} receive entries, aligned: {same_slot}"),
            );
            continue;
        }
        let medium = arch.medium(lane);
        for e in &group {
            let Some(p) = &e.payload else {
                r.push(Code::Pairing, id, "transfer without payload");
                continue;
            };
            let end = if e.kind == EntryKind::Send { &p.producer } else { &p.consumer };
            let op = table.entry(end).map(|x| x.lane.clone());
            let attached = match (&op, medium) {
                (Some(op), Some(m)) => m.connects(op),
                _ => false,
            };
            if !attached {
                r.push(
                    Code::Pairing,
                    id,
                    format!("{} endpoint {end} is not on an operator attached to {lane}", e.kind.name()),
                );
            }
        }
    }
}

fn check_blocks(table: &ScheduleTable, prob: &Problem<'_>, arch: &ArchitectureGraph, r: &mut ValidationReport) {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for e in table.compute_entries() {
        *seen.entry(&e.id).or_default() += 1;
        let Some(i) = prob.find(&e.id) else {
            r.push(Code::MissingBlock, &e.id, "compute entry for an unknown block instance");
            continue;
        };
        let inst = &prob.insts[i];
        let block = prob.block_of(i);
        if e.block.as_deref() != Some(block.name.as_str()) || e.instance != inst.k {
            r.push(Code::MissingBlock, &e.id, "entry does not name its block instance");
        }
        if let Some(c) = &block.constraint {
            if &e.lane != c {
                r.push(Code::Constraint, &e.id, format!("constrained to {c}, placed on {}", e.lane));
            }
        }
        if table.placement.get(&block.name) != Some(&e.lane) {
            r.push(Code::Constraint, &e.id, "lane disagrees with the placement map");
        }
        let expected = arch
            .operator(&e.lane)
            .and_then(|o| block.duration_on(&o.name, &o.op_type));
        match expected {
            None => r.push(Code::NoDuration, &e.id, format!("no duration on {}", e.lane)),
            Some(d) if d != e.duration_stu => r.push(
                Code::NoDuration,
                &e.id,
                format!("duration {} differs from the modeled {d}", e.duration_stu),
            ),
            _ => {}
        }
        if let Some(p) = inst.period {
            if e.start_stu < inst.release || e.end_stu() > inst.release + p {
                r.push(
                    Code::Period,
                    &e.id,
                    format!("runs outside its window [{}, {})", inst.release, inst.release + p),
                );
            }
        }
    }
    for inst in &prob.insts {
        match seen.get(inst.id.as_str()) {
            None => r.push(Code::MissingBlock, &inst.id, "no compute entry"),
            Some(n) if *n > 1 => r.push(Code::MissingBlock, &inst.id, format!("{n} compute entries")),
            _ => {}
        }
    }
}

fn has_synchro(table: &ScheduleTable, from: &str, to: &str, scope: SynchroScope) -> bool {
    table
        .synchros
        .iter()
        .any(|s| s.from == from && s.to == to && s.scope == scope)
}

fn check_deps(table: &ScheduleTable, prob: &Problem<'_>, r: &mut ValidationReport) {
    for (i, preds) in prob.preds.iter().enumerate() {
        let cid = &prob.insts[i].id;
        let Some(consumer) = table.entry(cid).filter(|e| e.kind == EntryKind::Compute) else {
            continue;
        };
        for pred in preds {
            let pid = &prob.insts[pred.inst].id;
            let Some(producer) = table.entry(pid).filter(|e| e.kind == EntryKind::Compute) else {
                continue;
            };
            let subject = format!("{pid} -> {cid}");
            if producer.lane == consumer.lane {
                if producer.end_stu() > consumer.start_stu {
                    r.push(Code::Order, &subject, "consumer starts before its producer ends");
                }
                continue;
            }
            match &pred.link {
                Link::Precedence => {
                    if !has_synchro(table, pid, cid, SynchroScope::Intra) {
                        r.push(Code::UnrealizedDep, &subject, "no synchronization between operators");
                    } else if producer.end_stu() > consumer.start_stu {
                        r.push(Code::Order, &subject, "consumer starts before its producer ends");
                    }
                }
                Link::Data { from_port, to_port, .. } => {
                    let recv = table.entries.iter().find(|e| {
                        e.kind == EntryKind::Receive
                            && e.payload.as_ref().is_some_and(|p| {
                                p.producer == *pid
                                    && p.consumer == *cid
                                    && p.from_port == *from_port
                                    && p.to_port == *to_port
                            })
                    });
                    match recv {
                        None => r.push(Code::UnrealizedDep, &subject, "no transfer between operators"),
                        Some(x) => {
                            if x.start_stu < producer.end_stu() || x.end_stu() > consumer.start_stu {
                                r.push(
                                    Code::Order,
                                    &subject,
                                    format!("transfer {} [{}, {}) is out of order", x.id, x.start_stu, x.end_stu()),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    for c in &prob.carries {
        let (pid, did) = (&prob.insts[c.producer].id, &prob.insts[c.delay].id);
        let (Some(p), Some(d)) = (table.entry(pid), table.entry(did)) else {
            continue;
        };
        let direct = has_synchro(table, pid, did, SynchroScope::Inter);
        let relayed = p.lane != d.lane
            && table.synchros.iter().any(|s| {
                s.scope == SynchroScope::Inter
                    && s.to == *did
                    && table.entry(&s.from).is_some_and(|x| {
                        x.kind.is_transfer() && x.payload.as_ref().is_some_and(|pl| pl.producer == *pid)
                    })
            });
        if !direct && !relayed {
            r.push(
                Code::UnrealizedDep,
                format!("{pid} -> {did}"),
                "delay state is not carried to the next repetition",
            );
        }
    }
}

fn check_synchros(table: &ScheduleTable, r: &mut ValidationReport) {
    for s in &table.synchros {
        let (Some(a), Some(b)) = (table.entry(&s.from), table.entry(&s.to)) else {
            r.push(Code::UnrealizedDep, format!("{} -> {}", s.from, s.to), "synchro endpoint missing");
            continue;
        };
        if s.scope == SynchroScope::Intra && a.end_stu() > b.start_stu {
            r.push(
                Code::Order,
                format!("{} -> {}", s.from, s.to),
                "synchronized entry starts before its predecessor ends",
            );
        }
    }
}

/// Cycle search over intra synchros, transfer payload links and lane sequences.
fn check_deadlock(table: &ScheduleTable, r: &mut ValidationReport) {
    let mut g = DiGraph::<&str, ()>::new();
    let mut nodes: HashMap<&str, NodeIndex> = HashMap::new();
    for e in &table.entries {
        if exclusive(e) {
            nodes.entry(&e.id).or_insert_with(|| g.add_node(&e.id));
        }
    }
    let edge = |g: &mut DiGraph<&str, ()>, a: &str, b: &str| {
        if let (Some(&x), Some(&y)) = (nodes.get(a), nodes.get(b)) {
            if x != y {
                g.update_edge(x, y, ());
            }
        }
    };
    for s in table.synchros.iter().filter(|s| s.scope == SynchroScope::Intra) {
        edge(&mut g, &s.from, &s.to);
    }
    for e in table.entries.iter().filter(|e| e.kind.is_transfer()) {
        if let Some(p) = &e.payload {
            match e.kind {
                EntryKind::Send => edge(&mut g, &p.producer, &e.id),
                _ => {
                    let inter = has_synchro(table, &e.id, &p.consumer, SynchroScope::Inter);
                    if !inter {
                        edge(&mut g, &e.id, &p.consumer);
                    }
                }
            }
        }
    }
    for lane in &table.lanes {
        let ids: Vec<&str> = table
            .lane_entries(&lane.name)
            .filter(|e| exclusive(e))
            .map(|e| e.id.as_str())
            .collect();
        for w in ids.windows(2) {
            edge(&mut g, w[0], w[1]);
        }
    }
    for scc in tarjan_scc(&g) {
        if scc.len() > 1 {
            let mut names: Vec<&str> = scc.iter().map(|n| g[*n]).collect();
            names.sort_unstable();
            r.push(Code::Deadlock, names.join(","), "entries wait on each other");
        }
    }
}
