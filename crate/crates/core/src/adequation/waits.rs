use super::table::{EntryKind, ScheduleEntry, ScheduleTable, TimerGate};
use super::AdequationError;
use crate::model::AlgorithmGraph;

/// Pads every periodic operator lane with wait entries up to its period and
/// reserves the gated chain's WCET after each timer-controller entry.
pub fn insert_waits(table: &ScheduleTable, flat: &AlgorithmGraph) -> Result<ScheduleTable, AdequationError> {
    let mut out = table.clone();
    out.entries.retain(|e| !matches!(e.kind, EntryKind::Wait | EntryKind::TimerReserve));
    out.timers.clear();
    let h = out.hyperperiod_stu;
    let mut added = Vec::new();
    let mut waits = 0usize;
    let mut reserves = 0usize;
    for lane in out.lanes.iter().filter(|l| l.is_operator()) {
        let compute: Vec<&ScheduleEntry> = out
            .entries
            .iter()
            .filter(|e| e.lane == lane.name && e.kind == EntryKind::Compute)
            .collect();
        let Some(first) = compute.first() else {
            continue;
        };
        let period_of = |e: &ScheduleEntry| e.block.as_ref().and_then(|b| out.periods.get(b)).copied();
        let Some(first_period) = period_of(first) else {
            continue;
        };
        let single_rate = compute.iter().all(|e| period_of(e) == Some(first_period));
        let window = if single_rate { first_period } else { h };
        let windows = (h / window).max(1);
        for w in 0..windows {
            let (lo, hi) = (w * window, (w + 1) * window);
            let in_window: Vec<&ScheduleEntry> = compute
                .iter()
                .copied()
                .filter(|e| e.start_stu >= lo && e.start_stu < hi)
                .collect();
            let busy_end = in_window.iter().map(|e| e.end_stu()).max().unwrap_or(lo);
            if busy_end > hi {
                return Err(AdequationError::PeriodOverflow {
                    subject: lane.name.clone(),
                    end: busy_end,
                    bound: hi,
                });
            }
            if busy_end < hi {
                added.push(ScheduleEntry {
                    id: format!("w{waits}"),
                    lane: lane.name.clone(),
                    kind: EntryKind::Wait,
                    block: None,
                    instance: 0,
                    payload: None,
                    start_stu: busy_end,
                    duration_stu: hi - busy_end,
                });
                waits += 1;
            }
            for (i, timer) in in_window.iter().enumerate() {
                let is_timer = timer
                    .block
                    .as_ref()
                    .and_then(|b| flat.block(b))
                    .is_some_and(|b| b.is_timer());
                if !is_timer {
                    continue;
                }
                let gated: Vec<&ScheduleEntry> = in_window[i + 1..]
                    .iter()
                    .copied()
                    .take_while(|e| {
                        !e.block
                            .as_ref()
                            .and_then(|b| flat.block(b))
                            .is_some_and(|b| b.is_timer())
                    })
                    .collect();
                let wcet: u64 = gated.iter().map(|e| e.duration_stu).sum();
                out.timers.push(TimerGate {
                    timer: timer.id.clone(),
                    lane: lane.name.clone(),
                    gated: gated.iter().map(|e| e.id.clone()).collect(),
                });
                if wcet > 0 {
                    added.push(ScheduleEntry {
                        id: format!("r{reserves}"),
                        lane: lane.name.clone(),
                        kind: EntryKind::TimerReserve,
                        block: timer.block.clone(),
                        instance: timer.instance,
                        payload: None,
                        start_stu: timer.end_stu(),
                        duration_stu: wcet,
                    });
                    reserves += 1;
                }
            }
        }
    }
    out.entries.extend(added);
    out.entries.sort_by_key(|e| e.start_stu);
    Ok(out)
}
