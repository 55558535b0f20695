use std::collections::BTreeSet;

use super::{CommDirection, CommOp, CommSequencer, MacroProgram, MacroStatement};
use crate::adequation::{EntryKind, ScheduleEntry, ScheduleTable, SynchroScope};
use crate::model::{AlgorithmGraph, Block, Direction};

/// Global buffer holding one block output: `<path>_<port>_buf`, `/` → `_`.
pub fn buffer_name(block: &str, port: &str) -> String {
    format!("{}_{port}_buf", symbol(block))
}

fn symbol(block: &str) -> String {
    block.replace('/', "_")
}

fn alloc(flat: &AlgorithmGraph, block: &str, port: &str) -> Option<MacroStatement> {
    let p = flat.block(block)?.port(port, Direction::Output)?;
    Some(MacroStatement::new(
        "alloc_",
        [p.dtype.clone(), buffer_name(block, port), p.width.to_string()],
    ))
}

fn block_call(flat: &AlgorithmGraph, b: &Block) -> Vec<String> {
    let mut args = vec![symbol(&b.name), b.kind.keyword().to_string()];
    for p in b.inputs() {
        args.push(match flat.feed_of(&b.name, &p.name) {
            Some(src) => buffer_name(&src.block, &src.port),
            None => "none".into(),
        });
    }
    args.extend(b.outputs().map(|p| buffer_name(&b.name, &p.name)));
    args
}

fn init_call(b: &Block) -> Vec<String> {
    let mut args = vec![symbol(&b.name), b.kind.keyword().to_string()];
    args.extend(b.params.iter().map(|(k, v)| format!("{k}={v}")));
    args
}

/// Operator lane holding the compute entry `id`.
fn lane_of<'a>(table: &'a ScheduleTable, id: &str) -> Option<&'a str> {
    table.entry(id).map(|e| e.lane.as_str())
}

/// One macro program per operator lane, in lane order.
pub fn emit_macros(table: &ScheduleTable, flat: &AlgorithmGraph) -> Vec<MacroProgram> {
    table
        .lanes
        .iter()
        .filter(|l| l.is_operator())
        .map(|lane| emit_one(table, flat, &lane.name))
        .collect()
}

fn emit_one(table: &ScheduleTable, flat: &AlgorithmGraph, op: &str) -> MacroProgram {
    let mut prog = MacroProgram {
        operator: op.to_string(),
        ..MacroProgram::default()
    };

    let mut token = 0usize;
    for lane in table.lanes.iter().filter(|l| !l.is_operator()) {
        let Some(gate) = lane.gate_of(op) else {
            continue;
        };
        let mut seq = CommSequencer {
            medium: lane.name.clone(),
            gate: gate.to_string(),
            members: lane.members(),
            ops: Vec::new(),
            selector: false,
        };
        for e in table.lane_entries(&lane.name) {
            let Some(p) = &e.payload else { continue };
            let buffer = buffer_name(
                table.entry(&p.producer).and_then(|x| x.block.as_deref()).unwrap_or(&p.producer),
                &p.from_port,
            );
            let (direction, peer) = match e.kind {
                EntryKind::Send if lane_of(table, &p.producer) == Some(op) => {
                    let mut peers: Vec<&str> = Vec::new();
                    for r in table.lane_entries(&lane.name) {
                        if r.id == e.id && r.kind == EntryKind::Receive {
                            if let Some(l) = r.payload.as_ref().and_then(|rp| lane_of(table, &rp.consumer)) {
                                if !peers.contains(&l) {
                                    peers.push(l);
                                }
                            }
                        }
                    }
                    (CommDirection::Send, peers.join("+"))
                }
                EntryKind::Receive if lane_of(table, &p.consumer) == Some(op) => {
                    if seq.ops.iter().any(|o| o.payload == e.id) {
                        continue;
                    }
                    let sender = lane_of(table, &p.producer).unwrap_or_default().to_string();
                    (CommDirection::Recv, sender)
                }
                _ => continue,
            };
            seq.ops.push(CommOp {
                direction,
                payload: e.id.clone(),
                peer,
                buffer,
                pre: Some(format!("Pre{token}")),
                suc: Some(format!("Suc{token}")),
                span: (e.start_stu, e.end_stu()),
            });
            token += 1;
        }
        prog.sequencers.push(seq);
    }

    // (start, class, statement): transfers sort before computes starting at
    // the same instant, waits last.
    let mut events: Vec<(u64, u8, MacroStatement)> = Vec::new();
    for seq in &prog.sequencers {
        for o in &seq.ops {
            let stmt = match o.direction {
                CommDirection::Send => MacroStatement::new("Pre", o.pre.clone()),
                CommDirection::Recv => MacroStatement::new("Suc", o.suc.clone()),
            };
            events.push((o.span.0, 0, stmt.at(o.span.0, o.span.1)));
        }
    }
    let mut blocks: Vec<&Block> = Vec::new();
    let mut buffers: BTreeSet<String> = BTreeSet::new();
    let lane_entries: Vec<&ScheduleEntry> = table.lane_entries(op).collect();
    for e in &lane_entries {
        match e.kind {
            EntryKind::Compute => {
                let Some(b) = e.block.as_deref().and_then(|b| flat.block(b)) else {
                    continue;
                };
                if !blocks.iter().any(|x| x.name == b.name) {
                    blocks.push(b);
                }
                let stmt = MacroStatement::new("loop_call", block_call(flat, b));
                events.push((e.start_stu, 1, stmt.at(e.start_stu, e.end_stu())));
            }
            EntryKind::Wait => {
                let stmt = MacroStatement::new("wait_", [e.duration_stu.to_string()]);
                events.push((e.start_stu, 2, stmt.at(e.start_stu, e.end_stu())));
            }
            _ => {}
        }
    }
    events.sort_by_key(|(t, class, _)| (*t, *class));
    prog.main_loop = events.into_iter().map(|(_, _, s)| s).collect();

    // Allocations: outputs of local blocks, then received or otherwise
    // referenced foreign buffers, in order of first use.
    for b in &blocks {
        for p in b.outputs() {
            if let Some(a) = alloc(flat, &b.name, &p.name) {
                buffers.insert(a.args[1].clone());
                prog.allocs.push(a);
            }
        }
    }
    let mut foreign: Vec<(String, String)> = Vec::new();
    for seq in &prog.sequencers {
        for o in seq.ops.iter().filter(|o| o.direction == CommDirection::Recv) {
            let received = table
                .entries
                .iter()
                .filter(|x| x.id == o.payload && x.kind == EntryKind::Receive)
                .filter_map(|x| x.payload.as_ref());
            for p in received {
                if let Some(src) = table.entry(&p.producer).and_then(|x| x.block.clone()) {
                    foreign.push((src, p.from_port.clone()));
                }
            }
        }
    }
    for b in &blocks {
        for p in b.inputs() {
            if let Some(src) = flat.feed_of(&b.name, &p.name) {
                foreign.push((src.block.clone(), src.port.clone()));
            }
        }
    }
    for (block, port) in foreign {
        if buffers.contains(&buffer_name(&block, &port)) {
            continue;
        }
        if let Some(a) = alloc(flat, &block, &port) {
            buffers.insert(a.args[1].clone());
            prog.allocs.push(a);
        }
    }

    prog.init = blocks
        .iter()
        .map(|b| MacroStatement::new("loop_call", init_call(b)))
        .collect();
    prog.end = blocks
        .iter()
        .map(|b| MacroStatement::new("loop_call", [symbol(&b.name), b.kind.keyword().to_string()]))
        .collect();

    for s in table.synchros.iter().filter(|s| s.scope == SynchroScope::Inter) {
        if lane_of(table, &s.from) == Some(op) || lane_of(table, &s.to) == Some(op) {
            prog.notes.push(format!("inter-repetition synchro {} -> {}", s.from, s.to));
        }
    }
    prog
}
