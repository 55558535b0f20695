use std::collections::{BTreeMap, BTreeSet};

use super::{CodegenError, CommOp, CommSequencer, MacroProgram, MacroStatement};

fn overlaps(a: (u64, u64), b: (u64, u64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Turns communication threads into selector functions called inline from the
/// main loop at the position of each transfer; Pre/Suc tokens disappear.
pub fn sequentialize_comm(progs: &[MacroProgram]) -> Result<Vec<MacroProgram>, CodegenError> {
    progs.iter().map(sequentialize_one).collect()
}

fn sequentialize_one(prog: &MacroProgram) -> Result<MacroProgram, CodegenError> {
    let mut by_token: BTreeMap<&str, (&str, &CommOp)> = BTreeMap::new();
    for seq in &prog.sequencers {
        for op in &seq.ops {
            for t in op.pre.iter().chain(op.suc.iter()) {
                by_token.insert(t, (&seq.medium, op));
            }
        }
    }
    let mut out = prog.clone();
    out.main_loop.clear();
    for stmt in &prog.main_loop {
        if stmt.name != "Pre" && stmt.name != "Suc" {
            out.main_loop.push(stmt.clone());
            continue;
        }
        let Some((medium, op)) = stmt.args.first().and_then(|t| by_token.get(t.as_str())) else {
            // A token without a matching sequencer operation carries nothing.
            continue;
        };
        if let Some(busy) = prog
            .main_loop
            .iter()
            .filter(|s| s.name == "loop_call")
            .find(|s| s.span.is_some_and(|span| overlaps(span, op.span)))
        {
            return Err(CodegenError::SequentializeConflict {
                operator: prog.operator.clone(),
                transfer: op.payload.clone(),
                block: busy.args.first().cloned().unwrap_or_default(),
            });
        }
        let inline = CommOp {
            pre: None,
            suc: None,
            ..(*op).clone()
        };
        out.main_loop.push(inline.statement(medium));
    }
    for seq in &mut out.sequencers {
        seq.selector = true;
        for op in &mut seq.ops {
            op.pre = None;
            op.suc = None;
        }
    }
    Ok(out)
}

/// Concatenates programs of one operator in argument order. With more than one
/// program, every local name of program `i` gets the prefix `m{i}_`.
pub fn merge_programs(progs: &[MacroProgram]) -> Result<MacroProgram, CodegenError> {
    let Some(first) = progs.first() else {
        return Ok(MacroProgram::default());
    };
    for p in &progs[1..] {
        if p.operator != first.operator {
            return Err(CodegenError::MergeOperator {
                expected: first.operator.clone(),
                found: p.operator.clone(),
            });
        }
    }
    let renamed: Vec<MacroProgram> = if progs.len() == 1 {
        progs.to_vec()
    } else {
        progs
            .iter()
            .enumerate()
            .map(|(i, p)| prefixed(p, &format!("m{i}_")))
            .collect()
    };

    let mut out = MacroProgram {
        operator: first.operator.clone(),
        iterations: first.iterations,
        ..MacroProgram::default()
    };
    let mut seen = BTreeSet::new();
    for p in renamed {
        for a in &p.allocs {
            let name = a.args.get(1).cloned().unwrap_or_default();
            if !seen.insert(name.clone()) {
                return Err(CodegenError::MergeCollision { name });
            }
        }
        out.allocs.extend(p.allocs);
        out.init.extend(p.init);
        out.main_loop.extend(p.main_loop);
        out.end.extend(p.end);
        out.notes.extend(p.notes);
        for seq in p.sequencers {
            match out.sequencers.iter_mut().find(|s| s.medium == seq.medium) {
                Some(existing) => existing.ops.extend(seq.ops),
                None => out.sequencers.push(seq),
            }
        }
    }
    Ok(out)
}

/// Local names: buffers, block symbols, payload ids and tokens.
fn local_names(p: &MacroProgram) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    names.extend(p.allocs.iter().filter_map(|a| a.args.get(1).cloned()));
    for s in p.init.iter().chain(&p.main_loop).chain(&p.end) {
        if s.name == "loop_call" {
            names.extend(s.args.first().cloned());
        }
    }
    for op in p.sequencers.iter().flat_map(|s| &s.ops) {
        names.insert(op.payload.clone());
        names.extend(op.pre.clone());
        names.extend(op.suc.clone());
    }
    names
}

fn prefixed(p: &MacroProgram, prefix: &str) -> MacroProgram {
    let names = local_names(p);
    let map = |s: &String| {
        if names.contains(s) {
            format!("{prefix}{s}")
        } else {
            s.clone()
        }
    };
    let stmts = |v: &[MacroStatement]| -> Vec<MacroStatement> {
        v.iter()
            .map(|s| MacroStatement {
                args: s.args.iter().map(map).collect(),
                ..s.clone()
            })
            .collect()
    };
    MacroProgram {
        operator: p.operator.clone(),
        allocs: stmts(&p.allocs),
        init: stmts(&p.init),
        main_loop: stmts(&p.main_loop),
        end: stmts(&p.end),
        sequencers: p
            .sequencers
            .iter()
            .map(|s| CommSequencer {
                ops: s
                    .ops
                    .iter()
                    .map(|o| CommOp {
                        payload: map(&o.payload),
                        buffer: map(&o.buffer),
                        pre: o.pre.as_ref().map(map),
                        suc: o.suc.as_ref().map(map),
                        ..o.clone()
                    })
                    .collect(),
                ..s.clone()
            })
            .collect(),
        iterations: p.iterations,
        notes: p.notes.clone(),
    }
}
