//! Discrete-event replay of a schedule table with sampled task durations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adequation::{EntryKind, ScheduleTable, SynchroScope};
use crate::model::AlgorithmGraph;

/// Execution-time bounds of one block, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDuration {
    pub best_case: u64,
    pub wcet: u64,
}

/// Per-block duration bounds and the sampler seed. Durations are drawn
/// uniformly on `[best_case, wcet]` and rounded to whole ticks; one STU is
/// `resolution` ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationModel {
    pub resolution: u64,
    pub blocks: BTreeMap<String, BlockDuration>,
    pub seed: u64,
}

impl DurationModel {
    /// WCET = modeled duration; best case = `best_fraction · WCET`, at least
    /// one tick.
    pub fn from_table(table: &ScheduleTable, resolution: u64, best_fraction: f64) -> Self {
        let resolution = resolution.max(1);
        let mut blocks = BTreeMap::new();
        for e in table.compute_entries() {
            let Some(b) = &e.block else { continue };
            let wcet = e.duration_stu * resolution;
            let best = ((wcet as f64 * best_fraction).round() as u64).clamp(1.min(wcet), wcet);
            blocks.insert(b.clone(), BlockDuration { best_case: best, wcet });
        }
        Self {
            resolution,
            blocks,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn sample(&self, block: &str, u: f64) -> Result<u64, ExecError> {
        let d = self.blocks.get(block).ok_or_else(|| ExecError::MissingBlock { block: block.into() })?;
        if d.best_case > d.wcet || (d.best_case == 0 && d.wcet > 0) {
            return Err(ExecError::Domain(format!(
                "{block}: best case {} and WCET {} must satisfy 0 < best <= WCET",
                d.best_case, d.wcet
            )));
        }
        Ok(d.best_case + (u * (d.wcet - d.best_case) as f64).round() as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecMode {
    /// Entries start as soon as their predecessors finish.
    EventDriven,
    /// Timer-gated entries block until their modeled activation instant.
    TimerBlocking,
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "event_driven" | "event-driven" => Ok(ExecMode::EventDriven),
            "timer_blocking" | "timer-blocking" => Ok(ExecMode::TimerBlocking),
            _ => Err(format!("unknown mode `{s}` (event_driven or timer_blocking)")),
        }
    }
}

/// One executed compute or transfer entry; times in ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecEvent {
    pub entry: String,
    pub block: Option<String>,
    pub lane: String,
    pub kind: EntryKind,
    pub start: u64,
    pub end: u64,
    pub repetition: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecTimeline {
    pub mode: ExecMode,
    pub resolution: u64,
    pub hyperperiod: u64,
    pub events: Vec<ExecEvent>,
}

impl ExecTimeline {
    pub fn stu(&self, ticks: u64) -> f64 {
        ticks as f64 / self.resolution as f64
    }

    /// Start instants of every compute event of `block`, in ticks.
    pub fn activations(&self, block: &str) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .events
            .iter()
            .filter(|e| e.kind == EntryKind::Compute && e.block.as_deref() == Some(block))
            .map(|e| e.start)
            .collect();
        v.sort_unstable();
        v
    }

    /// Comma-separated rows, times in STU with six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("repetition,lane,entry,block,kind,start,end\n");
        for e in &self.events {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6}",
                e.repetition,
                e.lane,
                e.entry,
                e.block.as_deref().unwrap_or(""),
                e.kind.name(),
                self.stu(e.start),
                self.stu(e.end)
            );
        }
        out
    }

    /// Reads back the output of [`to_csv`](Self::to_csv); STU values are
    /// rounded to the nearest tick.
    pub fn from_csv(text: &str, mode: ExecMode, resolution: u64) -> Result<Self, ExecError> {
        let resolution = resolution.max(1);
        let bad = |n: usize, what: &str| ExecError::Domain(format!("timeline line {n}: {what}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "repetition,lane,entry,block,kind,start,end" => {}
            _ => return Err(bad(1, "missing header")),
        }
        let ticks = |s: &str, n: usize| -> Result<u64, ExecError> {
            let v: f64 = s.parse().map_err(|_| bad(n, "bad time"))?;
            if !(v >= 0.0) {
                return Err(bad(n, "negative time"));
            }
            Ok((v * resolution as f64).round() as u64)
        };
        let mut events = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let [rep, lane, entry, block, kind, start, end] = f[..] else {
                return Err(bad(n, "expected 7 fields"));
            };
            let kind = match kind {
                "compute" => EntryKind::Compute,
                "send" => EntryKind::Send,
                _ => return Err(bad(n, "kind must be compute or send")),
            };
            events.push(ExecEvent {
                entry: entry.into(),
                block: (!block.is_empty()).then(|| block.to_string()),
                lane: lane.into(),
                kind,
                start: ticks(start, n)?,
                end: ticks(end, n)?,
                repetition: rep.parse().map_err(|_| bad(n, "bad repetition"))?,
            });
        }
        Ok(Self {
            mode,
            resolution,
            hyperperiod: 0,
            events,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("DOMAIN: {0}")]
    Domain(String),
    #[error("MISSING_BLOCK: no duration bounds for {block}")]
    MissingBlock { block: String },
    #[error("DEADLINE_MISS: {entry} in repetition {repetition} ready at {ready}, activation at {activation} (ticks)")]
    DeadlineMiss {
        entry: String,
        repetition: u32,
        ready: u64,
        activation: u64,
        partial: Box<ExecTimeline>,
    },
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::Domain(_) => "DOMAIN",
            ExecError::MissingBlock { .. } => "MISSING_BLOCK",
            ExecError::DeadlineMiss { .. } => "DEADLINE_MISS",
        }
    }
}

/// Replays `repetitions` hyperperiods of the table. Waits run as fixed
/// delays; timer reservations are not executed. Transfers keep their modeled
/// duration and start once the medium is free and the producer has finished.
pub fn simulate_executive(
    table: &ScheduleTable,
    dm: &DurationModel,
    mode: ExecMode,
    repetitions: u32,
) -> Result<ExecTimeline, ExecError> {
    if repetitions == 0 || dm.resolution == 0 {
        return Err(ExecError::Domain("repetitions and resolution must be positive".into()));
    }
    let res = dm.resolution;
    let mut timeline = ExecTimeline {
        mode,
        resolution: res,
        hyperperiod: table.hyperperiod_stu * res,
        events: Vec::new(),
    };
    let gated: BTreeSet<&str> = table
        .timers
        .iter()
        .flat_map(|t| std::iter::once(t.timer.as_str()).chain(t.gated.iter().map(String::as_str)))
        .collect();
    let mut intra: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut inter: HashMap<&str, Vec<&str>> = HashMap::new();
    for s in &table.synchros {
        let map = match s.scope {
            SynchroScope::Intra => &mut intra,
            SynchroScope::Inter => &mut inter,
        };
        map.entry(s.to.as_str()).or_default().push(s.from.as_str());
    }

    // Draw every duration up front so that the sequence of uniforms depends
    // only on the seed, not on the bounds.
    let mut rng = ChaCha8Rng::seed_from_u64(dm.seed);
    let computes: Vec<usize> = (0..table.entries.len())
        .filter(|&i| table.entries[i].kind == EntryKind::Compute)
        .collect();
    let mut sampled: Vec<HashMap<usize, u64>> = Vec::with_capacity(repetitions as usize);
    for _ in 0..repetitions {
        let mut rep = HashMap::new();
        for &i in &computes {
            let u: f64 = rng.random();
            let block = table.entries[i].block.as_deref().unwrap_or(&table.entries[i].id);
            rep.insert(i, dm.sample(block, u)?);
        }
        sampled.push(rep);
    }

    let mut lane_free: HashMap<&str, u64> = HashMap::new();
    let mut prev_end: HashMap<&str, u64> = HashMap::new();
    for r in 0..repetitions {
        let base = r as u64 * timeline.hyperperiod;
        let mut end_of: HashMap<&str, u64> = HashMap::new();
        for (i, e) in table.entries.iter().enumerate() {
            if e.kind == EntryKind::TimerReserve || (e.kind.is_transfer() && end_of.contains_key(e.id.as_str())) {
                continue;
            }
            let free = lane_free.get(e.lane.as_str()).copied().unwrap_or(0);
            if e.kind == EntryKind::Wait {
                lane_free.insert(&e.lane, free + e.duration_stu * res);
                continue;
            }
            let mut ready = free;
            for p in intra.get(e.id.as_str()).into_iter().flatten() {
                ready = ready.max(end_of.get(p).copied().unwrap_or(0));
            }
            if r > 0 {
                for p in inter.get(e.id.as_str()).into_iter().flatten() {
                    ready = ready.max(prev_end.get(p).copied().unwrap_or(0));
                }
            }
            let mut start = ready;
            if mode == ExecMode::TimerBlocking && gated.contains(e.id.as_str()) {
                let activation = base + e.start_stu * res;
                if ready > activation {
                    return Err(ExecError::DeadlineMiss {
                        entry: e.id.clone(),
                        repetition: r,
                        ready,
                        activation,
                        partial: Box::new(timeline),
                    });
                }
                start = activation;
            }
            let duration = match e.kind {
                EntryKind::Compute => sampled[r as usize][&i],
                _ => e.duration_stu * res,
            };
            let end = start + duration;
            lane_free.insert(&e.lane, end);
            end_of.insert(&e.id, end);
            timeline.events.push(ExecEvent {
                entry: e.id.clone(),
                block: e.block.clone(),
                lane: e.lane.clone(),
                kind: if e.kind.is_transfer() { EntryKind::Send } else { e.kind },
                start,
                end,
                repetition: r,
            });
        }
        prev_end = end_of;
    }
    Ok(timeline)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodStats {
    pub block: String,
    pub period_stu: u64,
    pub activations: usize,
    /// Inter-activation intervals in STU; `None` with fewer than two activations.
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Intervals shorter than the declared period.
    pub violations: usize,
}

/// Inter-activation statistics for every periodic block of the timeline.
pub fn period_report(t: &ExecTimeline, flat: &AlgorithmGraph) -> Vec<PeriodStats> {
    let blocks: BTreeSet<&str> = t.events.iter().filter_map(|e| e.block.as_deref()).collect();
    let mut out = Vec::new();
    for name in blocks {
        let Some(period) = flat.block(name).and_then(|b| flat.period_of(b)) else {
            continue;
        };
        let acts = t.activations(name);
        let gaps: Vec<u64> = acts.windows(2).map(|w| w[1] - w[0]).collect();
        let stu = |g: u64| t.stu(g);
        out.push(PeriodStats {
            block: name.to_string(),
            period_stu: period,
            activations: acts.len(),
            min: gaps.iter().min().map(|&g| stu(g)),
            max: gaps.iter().max().map(|&g| stu(g)),
            mean: (!gaps.is_empty()).then(|| stu(gaps.iter().sum::<u64>()) / gaps.len() as f64),
            violations: gaps.iter().filter(|&&g| g < period * t.resolution).count(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adequation::{Lane, LaneKind, ScheduleEntry};

    fn entry(id: &str, kind: EntryKind, start: u64, dur: u64) -> ScheduleEntry {
        ScheduleEntry {
            id: id.into(),
            lane: "p".into(),
            kind,
            block: (kind == EntryKind::Compute).then(|| id.to_string()),
            instance: 0,
            payload: None,
            start_stu: start,
            duration_stu: dur,
        }
    }

    fn table() -> ScheduleTable {
        ScheduleTable {
            hyperperiod_stu: 10,
            lanes: vec![Lane {
                name: "p".into(),
                kind: LaneKind::Operator { op_type: "U".into() },
            }],
            entries: vec![
                entry("a", EntryKind::Compute, 0, 4),
                entry("b", EntryKind::Compute, 4, 2),
                entry("w0", EntryKind::Wait, 6, 4),
            ],
            ..ScheduleTable::default()
        }
    }

    #[test]
    fn wcet_samples_replay_the_table() {
        let t = table();
        let dm = DurationModel::from_table(&t, 1, 1.0);
        let tl = simulate_executive(&t, &dm, ExecMode::EventDriven, 3).unwrap();
        let starts: Vec<u64> = tl.events.iter().map(|e| e.start).collect();
        assert_eq!(starts, vec![0, 4, 10, 14, 20, 24]);
    }

    #[test]
    fn early_finish_pulls_next_repetition_forward() {
        let t = table();
        let mut dm = DurationModel::from_table(&t, 1, 1.0);
        dm.blocks.insert("a".into(), BlockDuration { best_case: 2, wcet: 2 });
        let tl = simulate_executive(&t, &dm, ExecMode::EventDriven, 2).unwrap();
        assert_eq!(tl.activations("a"), vec![0, 8]);
    }

    #[test]
    fn missing_bounds_reported() {
        let t = table();
        let mut dm = DurationModel::from_table(&t, 1, 1.0);
        dm.blocks.remove("b");
        let err = simulate_executive(&t, &dm, ExecMode::EventDriven, 1).unwrap_err();
        assert_eq!(err.code(), "MISSING_BLOCK");
    }

    #[test]
    fn modes_parse() {
        assert_eq!("timer_blocking".parse::<ExecMode>().unwrap(), ExecMode::TimerBlocking);
        assert!("fast".parse::<ExecMode>().is_err());
    }
}
