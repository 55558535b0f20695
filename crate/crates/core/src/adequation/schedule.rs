//! Greedy earliest-finish list scheduling.

use std::collections::HashMap;

use super::problem::{Link, Problem};
use super::table::{
    EntryKind, Lane, LaneKind, Payload, ScheduleEntry, ScheduleTable, SynchroEdge, SynchroScope,
};
use super::AdequationError;
use crate::model::{AlgorithmGraph, ArchitectureGraph, Medium, Operator};

#[derive(Debug, Clone, Copy)]
struct Placed {
    op: usize,
    end: u64,
}

#[derive(Debug, Clone)]
struct PlannedTransfer {
    pred: usize,
    link: Link,
    medium: String,
    start: u64,
    end: u64,
}

#[derive(Debug, Clone)]
struct Plan {
    inst: usize,
    op: usize,
    start: u64,
    end: u64,
    transfers: Vec<PlannedTransfer>,
}

type BroadcastKey = (usize, String, String);

struct State<'p, 'a> {
    prob: &'p Problem<'a>,
    arch: &'a ArchitectureGraph,
    lane_free: HashMap<String, u64>,
    placed: Vec<Option<Placed>>,
    block_op: Vec<Option<usize>>,
    /// Broadcast sends already on a medium: (producer instance, port, medium) -> (id, start, end).
    bcast: HashMap<BroadcastKey, (String, u64, u64)>,
    table: ScheduleTable,
    next_transfer: usize,
}

fn lanes_of(arch: &ArchitectureGraph) -> Vec<Lane> {
    let ops = arch.operators.iter().map(|o| Lane {
        name: o.name.clone(),
        kind: LaneKind::Operator {
            op_type: o.op_type.clone(),
        },
    });
    let media = arch.media.iter().map(|m| Lane {
        name: m.name.clone(),
        kind: LaneKind::Medium {
            medium_kind: m.kind,
            broadcast: m.broadcast,
            attach: m.attach.clone(),
        },
    });
    ops.chain(media).collect()
}

fn transfer_time(m: &Medium, dtype: &str, width: u32) -> Result<u64, AdequationError> {
    m.transfer_duration
        .get(dtype)
        .map(|d| d * u64::from(width))
        .ok_or_else(|| AdequationError::NoDuration {
            subject: format!("{}:{dtype}", m.name),
        })
}

impl<'p, 'a> State<'p, 'a> {
    fn new(prob: &'p Problem<'a>, arch: &'a ArchitectureGraph) -> Self {
        Self {
            prob,
            arch,
            lane_free: HashMap::new(),
            placed: vec![None; prob.insts.len()],
            block_op: vec![None; prob.flat.blocks.len()],
            bcast: HashMap::new(),
            table: ScheduleTable {
                lanes: lanes_of(arch),
                ..ScheduleTable::default()
            },
            next_transfer: 0,
        }
    }

    /// Rebuilds scheduler state from a partial table.
    fn from_table(
        prob: &'p Problem<'a>,
        arch: &'a ArchitectureGraph,
        table: &ScheduleTable,
    ) -> Result<Self, AdequationError> {
        let mut s = Self::new(prob, arch);
        s.table = table.clone();
        for e in &table.entries {
            if e.kind != EntryKind::TimerReserve {
                let free = s.lane_free.entry(e.lane.clone()).or_default();
                *free = (*free).max(e.end_stu());
            }
            if e.kind.is_transfer() {
                if let Some(n) = e.id.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()) {
                    s.next_transfer = s.next_transfer.max(n + 1);
                }
            }
            match e.kind {
                EntryKind::Compute => {
                    let inst = prob.find(&e.id).ok_or_else(|| AdequationError::Inconsistent {
                        subject: e.id.clone(),
                    })?;
                    let op = arch
                        .operators
                        .iter()
                        .position(|o| o.name == e.lane)
                        .ok_or_else(|| AdequationError::UnknownOperator {
                            block: e.id.clone(),
                            operator: e.lane.clone(),
                        })?;
                    s.placed[inst] = Some(Placed {
                        op,
                        end: e.end_stu(),
                    });
                    s.block_op[prob.insts[inst].block] = Some(op);
                }
                EntryKind::Send => {
                    let broadcast = arch.medium(&e.lane).is_some_and(|m| m.broadcast);
                    if let (true, Some(p)) = (broadcast, &e.payload) {
                        if let Some(inst) = prob.find(&p.producer) {
                            s.bcast.insert(
                                (inst, p.from_port.clone(), e.lane.clone()),
                                (e.id.clone(), e.start_stu, e.end_stu()),
                            );
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(s)
    }

    fn free(&self, lane: &str) -> u64 {
        self.lane_free.get(lane).copied().unwrap_or(0)
    }

    fn op_index(&self, name: &str) -> Option<usize> {
        self.arch.operators.iter().position(|o| o.name == name)
    }

    /// Operators an instance may go to.
    fn candidates(&self, inst: usize) -> Result<Vec<usize>, AdequationError> {
        let b = self.prob.insts[inst].block;
        if let Some(op) = self.block_op[b] {
            return Ok(vec![op]);
        }
        let block = &self.prob.flat.blocks[b];
        match &block.constraint {
            Some(c) => self
                .op_index(c)
                .map(|i| vec![i])
                .ok_or_else(|| AdequationError::UnknownOperator {
                    block: block.name.clone(),
                    operator: c.clone(),
                }),
            None => Ok((0..self.arch.operators.len()).collect()),
        }
    }

    fn is_ready(&self, inst: usize) -> bool {
        self.placed[inst].is_none() && self.prob.preds[inst].iter().all(|p| self.placed[p.inst].is_some())
    }

    fn plan(&self, inst: usize, op: usize) -> Result<Option<Plan>, AdequationError> {
        let operator: &Operator = &self.arch.operators[op];
        let block = self.prob.block_of(inst);
        let Some(dur) = block.duration_on(&operator.name, &operator.op_type) else {
            return Ok(None);
        };
        let mut preds: Vec<_> = self.prob.preds[inst]
            .iter()
            .map(|p| (self.placed[p.inst].expect("ready instance"), p))
            .collect();
        preds.sort_by_key(|(placed, p)| (placed.end, p.inst));

        let mut ready = 0;
        let mut medium_free: HashMap<&str, u64> = HashMap::new();
        let mut local_bcast: HashMap<BroadcastKey, u64> = HashMap::new();
        let mut transfers = Vec::new();
        for (placed, pred) in preds {
            if placed.op == op {
                ready = ready.max(placed.end);
                continue;
            }
            let Link::Data {
                from_port,
                dtype,
                width,
                ..
            } = &pred.link
            else {
                ready = ready.max(placed.end);
                continue;
            };
            let from = &self.arch.operators[placed.op].name;
            let Some(medium) = self.arch.shared_media(from, &operator.name).into_iter().next() else {
                return Err(AdequationError::Unroutable {
                    producer: self.prob.insts[pred.inst].id.clone(),
                    consumer: self.prob.insts[inst].id.clone(),
                });
            };
            let key = (pred.inst, from_port.clone(), medium.name.clone());
            if medium.broadcast {
                if let Some((_, _, end)) = self.bcast.get(&key) {
                    ready = ready.max(*end);
                    continue;
                }
                if let Some(end) = local_bcast.get(&key) {
                    ready = ready.max(*end);
                    continue;
                }
            }
            let tdur = transfer_time(medium, dtype, *width)?;
            let free = medium_free
                .get(medium.name.as_str())
                .copied()
                .unwrap_or_else(|| self.free(&medium.name));
            let start = placed.end.max(free);
            let end = start + tdur;
            medium_free.insert(&medium.name, end);
            if medium.broadcast {
                local_bcast.insert(key, end);
            }
            ready = ready.max(end);
            transfers.push(PlannedTransfer {
                pred: pred.inst,
                link: pred.link.clone(),
                medium: medium.name.clone(),
                start,
                end,
            });
        }
        let start = self.prob.insts[inst]
            .release
            .max(self.free(&operator.name))
            .max(ready);
        Ok(Some(Plan {
            inst,
            op,
            start,
            end: start + dur,
            transfers,
        }))
    }

    fn payload(&self, pred: usize, inst: usize, link: &Link) -> Option<Payload> {
        match link {
            Link::Data {
                from_port,
                to_port,
                dtype,
                width,
            } => Some(Payload {
                dtype: dtype.clone(),
                width: *width,
                producer: self.prob.insts[pred].id.clone(),
                from_port: from_port.clone(),
                consumer: self.prob.insts[inst].id.clone(),
                to_port: to_port.clone(),
            }),
            Link::Precedence => None,
        }
    }

    fn synchro(&mut self, from: &str, to: &str, scope: SynchroScope) {
        let edge = SynchroEdge {
            from: from.to_string(),
            to: to.to_string(),
            scope,
        };
        if !self.table.synchros.contains(&edge) {
            self.table.synchros.push(edge);
        }
    }

    fn push_transfer(&mut self, medium: &str, start: u64, end: u64, payload: Option<Payload>) -> String {
        let id = format!("x{}", self.next_transfer);
        self.next_transfer += 1;
        for kind in [EntryKind::Send, EntryKind::Receive] {
            self.table.entries.push(ScheduleEntry {
                id: id.clone(),
                lane: medium.to_string(),
                kind,
                block: None,
                instance: 0,
                payload: payload.clone(),
                start_stu: start,
                duration_stu: end - start,
            });
        }
        self.lane_free.insert(medium.to_string(), end);
        id
    }

    fn commit(&mut self, plan: Plan) {
        let inst_id = self.prob.insts[plan.inst].id.clone();
        for t in &plan.transfers {
            let payload = self.payload(t.pred, plan.inst, &t.link);
            let pred_id = self.prob.insts[t.pred].id.clone();
            let from_port = match &t.link {
                Link::Data { from_port, .. } => from_port.clone(),
                Link::Precedence => String::new(),
            };
            let key = (t.pred, from_port, t.medium.clone());
            if let Some((id, start, end)) = self.bcast.get(&key).cloned() {
                self.table.entries.push(ScheduleEntry {
                    id: id.clone(),
                    lane: t.medium.clone(),
                    kind: EntryKind::Receive,
                    block: None,
                    instance: 0,
                    payload,
                    start_stu: start,
                    duration_stu: end - start,
                });
                self.synchro(&id, &inst_id, SynchroScope::Intra);
                continue;
            }
            let id = self.push_transfer(&t.medium, t.start, t.end, payload);
            if self.arch.medium(&t.medium).is_some_and(|m| m.broadcast) {
                self.bcast.insert(key, (id.clone(), t.start, t.end));
            }
            self.synchro(&pred_id, &id, SynchroScope::Intra);
            self.synchro(&id, &inst_id, SynchroScope::Intra);
        }
        for pred in self.prob.preds[plan.inst].clone() {
            let placed = self.placed[pred.inst].expect("ready instance");
            if placed.op != plan.op && pred.link == Link::Precedence {
                let pred_id = self.prob.insts[pred.inst].id.clone();
                self.synchro(&pred_id, &inst_id, SynchroScope::Intra);
            }
        }
        let op_name = self.arch.operators[plan.op].name.clone();
        let inst = &self.prob.insts[plan.inst];
        let block = self.prob.flat.blocks[inst.block].name.clone();
        self.table.entries.push(ScheduleEntry {
            id: inst_id,
            lane: op_name.clone(),
            kind: EntryKind::Compute,
            block: Some(block.clone()),
            instance: inst.k,
            payload: None,
            start_stu: plan.start,
            duration_stu: plan.end - plan.start,
        });
        self.lane_free.insert(op_name.clone(), plan.end);
        self.placed[plan.inst] = Some(Placed {
            op: plan.op,
            end: plan.end,
        });
        self.block_op[inst.block] = Some(plan.op);
        self.table.placement.insert(block, op_name);
    }

    fn key<'s>(&'s self, plan: &Plan) -> (u64, bool, &'s str, u32, &'s str) {
        let inst = &self.prob.insts[plan.inst];
        let block = &self.prob.flat.blocks[inst.block];
        (
            plan.end,
            block.constraint.is_none(),
            block.name.as_str(),
            inst.k,
            self.arch.operators[plan.op].name.as_str(),
        )
    }

    /// One greedy step: place the ready (instance, operator) pair finishing first.
    fn step(&mut self) -> Result<bool, AdequationError> {
        let mut best: Option<Plan> = None;
        for inst in 0..self.prob.insts.len() {
            if !self.is_ready(inst) {
                continue;
            }
            let mut feasible = false;
            let mut unroutable = None;
            for op in self.candidates(inst)? {
                match self.plan(inst, op) {
                    Ok(Some(plan)) => {
                        feasible = true;
                        if best.as_ref().is_none_or(|b| self.key(&plan) < self.key(b)) {
                            best = Some(plan);
                        }
                    }
                    Ok(None) => {}
                    Err(e @ AdequationError::Unroutable { .. }) => unroutable = Some(e),
                    Err(e) => return Err(e),
                }
            }
            if !feasible {
                return Err(unroutable.unwrap_or_else(|| AdequationError::NoDuration {
                    subject: self.prob.block_of(inst).name.clone(),
                }));
            }
        }
        match best {
            Some(plan) => {
                self.commit(plan);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn carry(&mut self) -> Result<(), AdequationError> {
        for c in self.prob.carries.clone() {
            let p = self.placed[c.producer].expect("all placed");
            let d = self.placed[c.delay].expect("all placed");
            let pid = self.prob.insts[c.producer].id.clone();
            let did = self.prob.insts[c.delay].id.clone();
            if p.op == d.op {
                self.synchro(&pid, &did, SynchroScope::Inter);
                continue;
            }
            let (from, to) = (
                self.arch.operators[p.op].name.clone(),
                self.arch.operators[d.op].name.clone(),
            );
            let Some(medium) = self.arch.shared_media(&from, &to).into_iter().next() else {
                return Err(AdequationError::Unroutable {
                    producer: pid,
                    consumer: did,
                });
            };
            let Link::Data { dtype, width, .. } = &c.link else {
                self.synchro(&pid, &did, SynchroScope::Inter);
                continue;
            };
            let start = p.end.max(self.free(&medium.name));
            let end = start + transfer_time(medium, dtype, *width)?;
            let payload = self.payload(c.producer, c.delay, &c.link);
            let name = medium.name.clone();
            let id = self.push_transfer(&name, start, end, payload);
            self.synchro(&pid, &id, SynchroScope::Intra);
            self.synchro(&id, &did, SynchroScope::Inter);
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ScheduleTable, AdequationError> {
        let makespan = self.table.makespan();
        let h = self.prob.hyperperiod.unwrap_or(makespan.max(1));
        for (i, inst) in self.prob.insts.iter().enumerate() {
            if let (Some(p), Some(placed)) = (inst.period, self.placed[i]) {
                if placed.end > inst.release + p {
                    return Err(AdequationError::PeriodOverflow {
                        subject: inst.id.clone(),
                        end: placed.end,
                        bound: inst.release + p,
                    });
                }
            }
        }
        if let Some(e) = self.table.entries.iter().find(|e| e.end_stu() > h) {
            return Err(AdequationError::PeriodOverflow {
                subject: e.id.clone(),
                end: e.end_stu(),
                bound: h,
            });
        }
        self.table.hyperperiod_stu = h;
        self.table.periods = self.prob.periods.clone();
        self.table.entries.sort_by_key(|e| e.start_stu);
        Ok(self.table)
    }
}

fn check_durations(prob: &Problem<'_>, arch: &ArchitectureGraph) -> Result<(), AdequationError> {
    for b in &prob.flat.blocks {
        let ops: Vec<&Operator> = match &b.constraint {
            Some(c) => vec![arch.operator(c).ok_or_else(|| AdequationError::UnknownOperator {
                block: b.name.clone(),
                operator: c.clone(),
            })?],
            None => arch.operators.iter().collect(),
        };
        if !ops.iter().any(|o| b.duration_on(&o.name, &o.op_type).is_some()) {
            return Err(AdequationError::NoDuration {
                subject: b.name.clone(),
            });
        }
    }
    Ok(())
}

/// Distributes and schedules a flat algorithm graph onto an architecture.
pub fn adequate(flat: &AlgorithmGraph, arch: &ArchitectureGraph) -> Result<ScheduleTable, AdequationError> {
    adequate_with_cancel(flat, arch, &|| false)
}

/// Like [`adequate`], polling `cancelled` between placement steps.
pub fn adequate_with_cancel(
    flat: &AlgorithmGraph,
    arch: &ArchitectureGraph,
    cancelled: &dyn Fn() -> bool,
) -> Result<ScheduleTable, AdequationError> {
    let mut findings = crate::model::validate_algorithm(flat);
    findings.extend(crate::model::validate_architecture(arch));
    if !findings.is_empty() {
        return Err(AdequationError::InvalidModel(findings));
    }
    let prob = Problem::new(flat)?;
    check_durations(&prob, arch)?;
    let mut state = State::new(&prob, arch);
    loop {
        if cancelled() {
            return Err(AdequationError::Cancelled);
        }
        if !state.step()? {
            break;
        }
    }
    state.carry()?;
    state.finish()
}

/// Earliest finish of the next unplaced instance of `block` on `op`, given a
/// partial table. `None` when the block cannot run there.
pub fn candidate_cost(
    partial: &ScheduleTable,
    block: &str,
    op: &str,
    flat: &AlgorithmGraph,
    arch: &ArchitectureGraph,
) -> Result<Option<u64>, AdequationError> {
    let prob = Problem::new(flat)?;
    let state = State::from_table(&prob, arch, partial)?;
    let b = flat
        .blocks
        .iter()
        .position(|x| x.name == block)
        .ok_or_else(|| AdequationError::Inconsistent {
            subject: block.to_string(),
        })?;
    let opi = state.op_index(op).ok_or_else(|| AdequationError::UnknownOperator {
        block: block.to_string(),
        operator: op.to_string(),
    })?;
    let first = prob.first[b];
    let Some(inst) = (first..first + prob.count[b] as usize).find(|&i| state.placed[i].is_none()) else {
        return Err(AdequationError::NotReady {
            block: block.to_string(),
        });
    };
    if !state.is_ready(inst) {
        return Err(AdequationError::NotReady {
            block: block.to_string(),
        });
    }
    if !state.candidates(inst)?.contains(&opi) {
        return Ok(None);
    }
    Ok(state.plan(inst, opi)?.map(|p| p.end))
}
