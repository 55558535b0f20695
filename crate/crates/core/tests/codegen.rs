mod support;

use std::collections::BTreeSet;

use adequa::adequation::{adequate, insert_waits, EntryKind, ScheduleTable};
use adequa::codegen::{
    buffer_name, emit_macros, expand, merge_programs, sequentialize_comm, CodegenError, CommDirection, CommOp,
    CommSequencer, MacroProgram, MacroStatement, TargetDefinition,
};
use adequa::AlgorithmGraph;
use proptest::prelude::*;
use support::{example, instance, read_model};

fn atmega() -> TargetDefinition {
    TargetDefinition::parse(&read_model("atmega128.tdef")).unwrap()
}

fn program<'a>(progs: &'a [MacroProgram], op: &str) -> &'a MacroProgram {
    progs.iter().find(|p| p.operator == op).unwrap()
}

fn tokens(p: &MacroProgram) -> usize {
    let in_loop = p.main_loop.iter().filter(|s| s.name == "Pre" || s.name == "Suc").count();
    let in_ops = p
        .sequencers
        .iter()
        .flat_map(|s| &s.ops)
        .filter(|o| o.pre.is_some() || o.suc.is_some())
        .count();
    in_loop + in_ops
}

/// Payload ids of inline transfers on `medium`, in main loop order.
fn inline_order(p: &MacroProgram, medium: &str) -> Vec<String> {
    p.main_loop
        .iter()
        .filter(|s| (s.name == "send_" || s.name == "recv_") && s.args[0] == medium)
        .map(|s| s.args[1].clone())
        .collect()
}

/// Checks a program against the schedule it came from, independently of the
/// emitter: one call per compute entry in lane order, one operation per
/// transfer touching the operator, and every buffer used is allocated once.
fn check_emitted(table: &ScheduleTable, flat: &AlgorithmGraph, p: &MacroProgram) -> Result<(), TestCaseError> {
    let calls: Vec<(u64, u64)> = p.main_loop.iter().filter(|s| s.name == "loop_call").filter_map(|s| s.span).collect();
    let computes: Vec<(u64, u64)> = table
        .lane_entries(&p.operator)
        .filter(|e| e.kind == EntryKind::Compute)
        .map(|e| (e.start_stu, e.end_stu()))
        .collect();
    prop_assert_eq!(calls, computes);

    let waits = p.main_loop.iter().filter(|s| s.name == "wait_").count();
    prop_assert_eq!(waits, table.lane_entries(&p.operator).filter(|e| e.kind == EntryKind::Wait).count());

    let mut expected: BTreeSet<(String, String, CommDirection)> = BTreeSet::new();
    for e in table.entries.iter().filter(|e| e.kind.is_transfer()) {
        let pl = e.payload.as_ref().unwrap();
        let lane_of = |id: &str| table.entry(id).map(|x| x.lane.clone());
        if e.kind == EntryKind::Send && lane_of(&pl.producer).as_deref() == Some(&p.operator) {
            expected.insert((e.lane.clone(), e.id.clone(), CommDirection::Send));
        }
        if e.kind == EntryKind::Receive && lane_of(&pl.consumer).as_deref() == Some(&p.operator) {
            expected.insert((e.lane.clone(), e.id.clone(), CommDirection::Recv));
        }
    }
    let mut found = BTreeSet::new();
    for s in &p.sequencers {
        for o in &s.ops {
            prop_assert!(found.insert((s.medium.clone(), o.payload.clone(), o.direction)), "duplicate op {}", o.payload);
        }
    }
    prop_assert_eq!(found, expected);

    let allocated: Vec<&str> = p.allocs.iter().map(|a| a.args[1].as_str()).collect();
    let unique: BTreeSet<&str> = allocated.iter().copied().collect();
    prop_assert_eq!(unique.len(), allocated.len());
    let compute_blocks = table
        .lane_entries(&p.operator)
        .filter(|e| e.kind == EntryKind::Compute)
        .map(|e| e.block.clone().unwrap());
    for (s, block) in p.main_loop.iter().filter(|s| s.name == "loop_call").zip(compute_blocks) {
        let b = flat.block(&block).unwrap();
        prop_assert_eq!(&s.args[0], &block.replace('/', "_"));
        for buf in &s.args[2..] {
            prop_assert!(buf == "none" || unique.contains(buf.as_str()), "{} not allocated", buf);
        }
        prop_assert_eq!(s.args.len(), 2 + b.ports.len());
    }
    Ok(())
}

fn check_sequentialized(before: &MacroProgram, after: &MacroProgram) -> Result<(), TestCaseError> {
    prop_assert_eq!(tokens(after), 0);
    prop_assert!(after.sequencers.iter().all(|s| s.selector));
    for s in &before.sequencers {
        let order: Vec<String> = s.ops.iter().map(|o| o.payload.clone()).collect();
        prop_assert_eq!(inline_order(after, &s.medium), order);
    }
    let calls = |p: &MacroProgram| p.main_loop.iter().filter(|s| s.name == "loop_call").cloned().collect::<Vec<_>>();
    prop_assert_eq!(calls(before), calls(after));
    Ok(())
}

fn check_expansion(p: &MacroProgram, target: &TargetDefinition) -> Result<(), TestCaseError> {
    let c = expand(p, target).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(!c.contains('$'), "unexpanded placeholder in\n{}", c);
    for a in &p.allocs {
        let decl = format!("{} {}[{}];", target.type_map[&a.args[0]], a.args[1], a.args[2]);
        prop_assert!(c.contains(&decl), "missing `{}`", decl);
    }
    Ok(())
}

#[test]
fn multiproc_sequencers() {
    let ex = example("multiproc");
    let progs = emit_macros(&ex.table, &ex.flat);
    let node0 = program(&progs, "node0");
    let com_a = node0.sequencers.iter().find(|s| s.medium == "comA").unwrap();
    assert_eq!(com_a.members, ["node0", "node1", "node2", "node3"]);
    assert_eq!(com_a.gate, "c");
    let com_b = node0.sequencers.iter().find(|s| s.medium == "comB").unwrap();
    assert_eq!(com_b.members, ["node0", "pc"]);
    assert_eq!(com_b.gate, "e");
    assert!(tokens(node0) > 0);
    for p in &progs {
        check_emitted(&ex.table, &ex.flat, p).unwrap();
    }
}

#[test]
fn multiproc_sequentialized_and_expanded() {
    let ex = example("multiproc");
    let progs = emit_macros(&ex.table, &ex.flat);
    let seq = sequentialize_comm(&progs).unwrap();
    let target = atmega();
    for (before, after) in progs.iter().zip(&seq) {
        check_sequentialized(before, after).unwrap();
        check_expansion(before, &target).unwrap();
        check_expansion(after, &target).unwrap();
    }
    let c = expand(program(&seq, "node0"), &target).unwrap();
    assert!(c.contains("static uint16_t TTTTemperature_temp_buf[1];"));
    assert!(c.contains("void comA_com(uint8_t id)"));
}

#[test]
fn mono_program_shape() {
    let ex = example("mono");
    let progs = emit_macros(&ex.table, &ex.flat);
    assert_eq!(progs.len(), 1);
    let p = &progs[0];
    assert!(p.sequencers.is_empty());
    assert_eq!(p.main_loop.last().unwrap().name, "wait_");
    assert_eq!(p.main_loop.last().unwrap().args, ["63"]);
    assert_eq!(p.init.len(), ex.flat.blocks.len());
    check_emitted(&ex.table, &ex.flat, p).unwrap();
}

#[test]
fn buffer_names_flatten_paths() {
    assert_eq!(buffer_name("pid/kp", "o"), "pid_kp_o_buf");
}

#[test]
fn merge_prefixes_every_local_name() {
    let ex = example("multiproc");
    let p = program(&emit_macros(&ex.table, &ex.flat), "node0").clone();
    let merged = merge_programs(&[p.clone(), p.clone()]).unwrap();
    assert_eq!(merged.allocs.len(), 2 * p.allocs.len());
    assert_eq!(merged.main_loop.len(), 2 * p.main_loop.len());
    for (i, a) in merged.allocs.iter().enumerate() {
        let prefix = if i < p.allocs.len() { "m0_" } else { "m1_" };
        assert!(a.args[1].starts_with(prefix), "{}", a.args[1]);
    }
    // Sequencers on one medium share a thread.
    assert_eq!(merged.sequencers.len(), p.sequencers.len());
    for s in &merged.sequencers {
        let orig = p.sequencers.iter().find(|o| o.medium == s.medium).unwrap();
        assert_eq!(s.ops.len(), 2 * orig.ops.len());
        let tokens: BTreeSet<_> = s.ops.iter().flat_map(|o| o.pre.iter().chain(&o.suc)).collect();
        assert_eq!(tokens.len(), 4 * orig.ops.len());
    }
    assert_eq!(merge_programs(std::slice::from_ref(&p)).unwrap(), p);
}

#[test]
fn merge_rejects_foreign_operator() {
    let ex = example("multiproc");
    let progs = emit_macros(&ex.table, &ex.flat);
    let e = merge_programs(&[program(&progs, "node0").clone(), program(&progs, "pc").clone()]).unwrap_err();
    assert_eq!(e.code(), "MERGE_OPERATOR");
}

#[test]
fn overlapping_transfer_cannot_be_inlined() {
    let prog = MacroProgram {
        operator: "a".into(),
        main_loop: vec![
            MacroStatement::new("Pre", ["Pre0"]).at(0, 4),
            MacroStatement::new("loop_call", ["f", "function"]).at(2, 5),
        ],
        sequencers: vec![CommSequencer {
            medium: "bus".into(),
            gate: "g".into(),
            members: vec!["a".into(), "b".into()],
            ops: vec![CommOp {
                direction: CommDirection::Send,
                payload: "x0".into(),
                peer: "b".into(),
                buffer: "f_o_buf".into(),
                pre: Some("Pre0".into()),
                suc: Some("Suc0".into()),
                span: (0, 4),
            }],
            selector: false,
        }],
        ..MacroProgram::default()
    };
    let e = sequentialize_comm(&[prog]).unwrap_err();
    assert!(matches!(e, CodegenError::SequentializeConflict { ref block, .. } if block == "f"));
}

#[test]
fn type_map_change_touches_only_declarations() {
    let ex = example("multiproc");
    let p = program(&emit_macros(&ex.table, &ex.flat), "node0").clone();
    let base = atmega();
    let changed = base.clone().with_type("uint16", "u16_custom");
    let a = expand(&p, &base).unwrap();
    let b = expand(&p, &changed).unwrap();
    let (la, lb): (Vec<_>, Vec<_>) = (a.lines().collect(), b.lines().collect());
    assert_eq!(la.len(), lb.len());
    let differing: Vec<_> = la.iter().zip(&lb).filter(|(x, y)| x != y).collect();
    assert!(!differing.is_empty());
    for (x, y) in differing {
        assert!(x.contains("uint16_t") && y.contains("u16_custom"), "{x} / {y}");
        assert_eq!(x.replace("uint16_t", "u16_custom"), **y);
    }
}

#[test]
fn template_errors() {
    let ex = example("multiproc");
    let p = program(&emit_macros(&ex.table, &ex.flat), "node0").clone();

    let mut no_send = atmega();
    no_send.templates.retain(|(m, _), _| m != "send_");
    assert_eq!(expand(&p, &no_send).unwrap_err().code(), "MISSING_TEMPLATE");

    let mut no_type = atmega();
    no_type.type_map.remove("uint16");
    assert_eq!(expand(&p, &no_type).unwrap_err().code(), "MISSING_TYPE_MAP");

    let e = TargetDefinition::parse("[types]\nuint8 uint8_t\n").unwrap_err();
    assert!(matches!(e, CodegenError::Syntax { line: 2, .. }));
    assert_eq!(MacroProgram::from_m4k("main_\nendmain_\n").unwrap_err().code(), "SYNTAX");
}

#[test]
fn literal_sigil_survives() {
    let t = TargetDefinition::default()
        .with_type("uint8", "uint8_t")
        .with_template("loop_", "loop", "/* $$ $0 */")
        .with_template("endloop_", "loop", "")
        .with_template("main_", "init", "")
        .with_template("endmain_", "end", "");
    let c = expand(&MacroProgram::default(), &t).unwrap();
    assert!(c.contains("/* $ loop_ */"));
}

#[test]
fn golden_programs_round_trip() {
    for (stem, ops) in [("mono", &["node3"][..]), ("multiproc", &["node0", "node1", "node2", "node3", "pc"][..])] {
        for op in ops {
            let text = read_model(&format!("golden/{stem}/{op}.m4k"));
            assert_eq!(MacroProgram::from_m4k(&text).unwrap().to_m4k(), text);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn generated_programs(inst in instance(8, 3, true)) {
        let raw = adequate(&inst.flat, &inst.arch).unwrap();
        let table = insert_waits(&raw, &inst.flat).unwrap_or(raw);
        let progs = emit_macros(&table, &inst.flat);
        let target = atmega();
        for p in &progs {
            check_emitted(&table, &inst.flat, p)?;
            prop_assert_eq!(&MacroProgram::from_m4k(&p.to_m4k()).unwrap(), p);
            check_expansion(p, &target)?;
        }
        // Transfers occupy the medium while the operator may keep
        // computing; inlining is possible exactly when no transfer of the
        // operator overlaps one of its calls.
        for before in &progs {
            let overlap = before.sequencers.iter().flat_map(|s| &s.ops).any(|o| {
                before
                    .main_loop
                    .iter()
                    .filter(|s| s.name == "loop_call")
                    .filter_map(|s| s.span)
                    .any(|(a, b)| a < o.span.1 && o.span.0 < b)
            });
            match sequentialize_comm(std::slice::from_ref(before)) {
                Ok(after) => {
                    prop_assert!(!overlap);
                    let after = &after[0];
                    check_sequentialized(before, after)?;
                    prop_assert_eq!(&MacroProgram::from_m4k(&after.to_m4k()).unwrap(), after);
                    check_expansion(after, &target)?;
                }
                Err(e) => {
                    prop_assert!(overlap, "{}", e);
                    prop_assert_eq!(e.code(), "SEQUENTIALIZE_CONFLICT");
                }
            }
        }
    }
}
