use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write;

use super::pid::{pid_step, PidParams, PidState};
use super::plant::{lag_rate, static_map, PlantParams};
use super::HybridError;
use crate::report::{Code, ValidationReport};

/// Block behaviours. Continuous time constants and clock periods are in
/// seconds; PID parameters keep their ms units.
#[derive(Debug, Clone, PartialEq)]
pub enum SimKind {
    Constant { value: f64 },
    Gain { k: f64 },
    Summation { signs: Vec<f64> },
    Saturation { min: f64, max: f64 },
    /// Rounds to the nearest integer, ties away from zero.
    Quantizer,
    /// One-step memory: outputs its state, then latches the input.
    Register { init: f64 },
    Pt1 { k: f64, tau: f64 },
    /// Dead time approximated by a unit-gain first-order lag.
    DeadTime { tau: f64 },
    StaticMap(PlantParams),
    /// Inputs: set point, measurement.
    Pid(PidParams),
    EventClock { period: f64, offset: f64 },
    Scope,
}

impl SimKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            SimKind::Constant { .. } => "constant",
            SimKind::Gain { .. } => "gain",
            SimKind::Summation { .. } => "summation",
            SimKind::Saturation { .. } => "saturation",
            SimKind::Quantizer => "quantizer",
            SimKind::Register { .. } => "register",
            SimKind::Pt1 { .. } => "pt1",
            SimKind::DeadTime { .. } => "deadtime",
            SimKind::StaticMap(_) => "static_map",
            SimKind::Pid(_) => "pid",
            SimKind::EventClock { .. } => "event_clock",
            SimKind::Scope => "scope",
        }
    }

    pub fn inputs(&self) -> usize {
        match self {
            SimKind::Constant { .. } | SimKind::EventClock { .. } => 0,
            SimKind::Summation { signs } => signs.len(),
            SimKind::Pid(_) => 2,
            _ => 1,
        }
    }

    pub fn has_output(&self) -> bool {
        !matches!(self, SimKind::EventClock { .. } | SimKind::Scope)
    }

    /// Integrated every continuous step, never event-activated.
    pub fn is_continuous(&self) -> bool {
        matches!(self, SimKind::Pt1 { .. } | SimKind::DeadTime { .. })
    }

    /// Output depends on the current input within the same instant.
    pub fn feedthrough(&self) -> bool {
        match self {
            SimKind::Register { .. } | SimKind::Pt1 { .. } => false,
            SimKind::DeadTime { tau } => *tau == 0.0,
            _ => true,
        }
    }

    fn has_memory(&self) -> bool {
        matches!(self, SimKind::Register { .. } | SimKind::Pid(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimBlock {
    pub name: String,
    pub kind: SimKind,
}

/// Regular link from the single output of `from` to input `port` of `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RegularLink {
    pub from: String,
    pub to: String,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ActivationLink {
    pub clock: String,
    pub block: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagram {
    pub name: String,
    pub blocks: Vec<SimBlock>,
    pub regular_links: Vec<RegularLink>,
    pub activation_links: Vec<ActivationLink>,
}

impl Diagram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn block(mut self, name: &str, kind: SimKind) -> Self {
        self.blocks.push(SimBlock {
            name: name.into(),
            kind,
        });
        self
    }

    pub fn link(mut self, from: &str, to: &str, port: usize) -> Self {
        self.regular_links.push(RegularLink {
            from: from.into(),
            to: to.into(),
            port,
        });
        self
    }

    pub fn activate(mut self, clock: &str, block: &str) -> Self {
        self.activation_links.push(ActivationLink {
            clock: clock.into(),
            block: block.into(),
        });
        self
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// Structural checks: names, link endpoints and arity, activation
    /// sources, clock periods and algebraic loops.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new();
        let mut names = BTreeSet::new();
        for b in &self.blocks {
            if b.name.is_empty() {
                r.push(Code::BadName, "<diagram>", "empty block name");
            }
            if !names.insert(b.name.as_str()) {
                r.push(Code::DuplicateName, &b.name, "block declared twice");
            }
            if let SimKind::EventClock { period, offset } = b.kind {
                if !(period > 0.0) || !(offset >= 0.0) {
                    r.push(Code::BadClock, &b.name, format!("period {period}, offset {offset}"));
                }
            }
        }
        let mut fed: BTreeMap<(&str, usize), usize> = BTreeMap::new();
        for l in &self.regular_links {
            let subject = format!("{} -> {}.{}", l.from, l.to, l.port);
            let (Some(a), Some(b)) = (self.index(&l.from), self.index(&l.to)) else {
                r.push(Code::BadLink, subject, "unknown block");
                continue;
            };
            if !self.blocks[a].kind.has_output() {
                r.push(Code::BadLink, subject, format!("{} has no regular output", l.from));
            } else if l.port >= self.blocks[b].kind.inputs() {
                r.push(Code::BadLink, subject, format!("{} has {} inputs", l.to, self.blocks[b].kind.inputs()));
            } else {
                *fed.entry((self.blocks[b].name.as_str(), l.port)).or_default() += 1;
            }
        }
        for b in &self.blocks {
            for port in 0..b.kind.inputs() {
                match fed.get(&(b.name.as_str(), port)).copied().unwrap_or(0) {
                    0 => r.push(Code::BadLink, format!("{}.{port}", b.name), "input is not connected"),
                    1 => {}
                    _ => r.push(Code::MultipleFeed, format!("{}.{port}", b.name), "input fed more than once"),
                }
            }
        }
        let mut activated = BTreeSet::new();
        for a in &self.activation_links {
            let subject = format!("{} => {}", a.clock, a.block);
            match (self.index(&a.clock), self.index(&a.block)) {
                (Some(c), Some(b)) => {
                    if !matches!(self.blocks[c].kind, SimKind::EventClock { .. }) {
                        r.push(Code::BadActivation, subject, format!("{} is not an event clock", a.clock));
                    } else if matches!(self.blocks[b].kind, SimKind::EventClock { .. }) || self.blocks[b].kind.is_continuous() {
                        r.push(Code::BadActivation, subject, format!("{} cannot be event-activated", a.block));
                    } else if !activated.insert(b) {
                        r.push(Code::BadActivation, subject, format!("{} has two activation sources", a.block));
                    } else if let (SimKind::Pid(p), SimKind::EventClock { period, .. }) =
                        (&self.blocks[b].kind, &self.blocks[c].kind)
                    {
                        if (p.ts - period * 1000.0).abs() > 1e-9 * p.ts.abs().max(1.0) {
                            r.push(
                                Code::BadActivation,
                                subject,
                                format!("controller samples every {} ms but the clock ticks every {} s", p.ts, period),
                            );
                        }
                    }
                }
                _ => r.push(Code::BadActivation, subject, "unknown block"),
            }
        }
        if r.is_empty() {
            if let Err(cycle) = self.order() {
                r.push(Code::AlgebraicLoop, cycle.join(", "), "feedthrough cycle without memory");
            }
        }
        r
    }

    fn sources(&self) -> Vec<Vec<usize>> {
        let mut src = vec![Vec::new(); self.blocks.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            src[i] = vec![usize::MAX; b.kind.inputs()];
        }
        for l in &self.regular_links {
            if let (Some(a), Some(b)) = (self.index(&l.from), self.index(&l.to)) {
                if let Some(slot) = src[b].get_mut(l.port) {
                    *slot = a;
                }
            }
        }
        src
    }

    /// Evaluation order: topological over feedthrough links, ties by
    /// declaration index. On a loop, returns the blocks left over.
    fn order(&self) -> Result<Vec<usize>, Vec<String>> {
        let n = self.blocks.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for l in &self.regular_links {
            let (Some(a), Some(b)) = (self.index(&l.from), self.index(&l.to)) else {
                continue;
            };
            if self.blocks[b].kind.feedthrough() {
                succ[a].push(b);
                indeg[b] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            out.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(Reverse(j));
                }
            }
        }
        if out.len() == n {
            Ok(out)
        } else {
            Err((0..n)
                .filter(|&i| indeg[i] > 0)
                .map(|i| self.blocks[i].name.clone())
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Act {
    /// Evaluated every continuous step.
    Always,
    /// Depends on constants only.
    Static,
    Clock(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Resolution {
    Resolved(Act),
    Unresolved,
    Ambiguous,
}

/// Activation of every block: explicit links first, then inheritance from
/// regular-input predecessors. A continuous predecessor makes the result
/// continuous; two distinct clocks are ambiguous.
fn resolve(d: &Diagram) -> Vec<Resolution> {
    let n = d.blocks.len();
    let mut res = vec![Resolution::Unresolved; n];
    for a in &d.activation_links {
        if let (Some(c), Some(b)) = (d.index(&a.clock), d.index(&a.block)) {
            res[b] = Resolution::Resolved(Act::Clock(c));
        }
    }
    for (i, b) in d.blocks.iter().enumerate() {
        if b.kind.is_continuous() {
            res[i] = Resolution::Resolved(Act::Always);
        } else if matches!(b.kind, SimKind::Constant { .. }) && res[i] == Resolution::Unresolved {
            res[i] = Resolution::Resolved(Act::Static);
        }
    }
    let src = d.sources();
    loop {
        let mut changed = false;
        for i in 0..n {
            if res[i] != Resolution::Unresolved || matches!(d.blocks[i].kind, SimKind::EventClock { .. }) {
                continue;
            }
            let preds: Vec<&Resolution> = src[i].iter().filter(|&&s| s != usize::MAX).map(|&s| &res[s]).collect();
            if preds.is_empty() || preds.iter().any(|p| **p == Resolution::Unresolved) {
                continue;
            }
            let mut clocks = BTreeSet::new();
            let mut always = false;
            let mut ambiguous = false;
            for p in preds {
                match p {
                    Resolution::Resolved(Act::Clock(c)) => {
                        clocks.insert(*c);
                    }
                    Resolution::Resolved(Act::Always) => always = true,
                    Resolution::Ambiguous => ambiguous = true,
                    _ => {}
                }
            }
            res[i] = if ambiguous || clocks.len() > 1 {
                Resolution::Ambiguous
            } else if always {
                Resolution::Resolved(Act::Always)
            } else if let Some(&c) = clocks.first() {
                Resolution::Resolved(Act::Clock(c))
            } else if d.blocks[i].kind.has_memory() {
                // Memory driven by constants alone never gets an event.
                continue;
            } else {
                Resolution::Resolved(Act::Static)
            };
            changed = true;
        }
        if !changed {
            break;
        }
    }
    res
}

/// Makes inherited clock activations explicit. Blocks that end up
/// continuous or constant keep no activation link.
pub fn infer_activations(d: &Diagram) -> Result<Diagram, HybridError> {
    let res = resolve(d);
    let mut out = d.clone();
    let explicit: BTreeSet<&str> = d.activation_links.iter().map(|a| a.block.as_str()).collect();
    for (i, r) in res.iter().enumerate() {
        match r {
            Resolution::Ambiguous => {
                return Err(HybridError::AmbiguousInheritance {
                    block: d.blocks[i].name.clone(),
                })
            }
            Resolution::Resolved(Act::Clock(c)) if !explicit.contains(d.blocks[i].name.as_str()) => {
                out.activation_links.push(ActivationLink {
                    clock: d.blocks[*c].name.clone(),
                    block: d.blocks[i].name.clone(),
                });
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Warns about pairs of equal-period clocks whose activated blocks are joined
/// by a data path: their relative order within an instant is unspecified.
pub fn check_synchronism(d: &Diagram) -> ValidationReport {
    let mut r = ValidationReport::new();
    let res = resolve(d);
    let n = d.blocks.len();
    let mut succ = vec![Vec::new(); n];
    for l in &d.regular_links {
        if let (Some(a), Some(b)) = (d.index(&l.from), d.index(&l.to)) {
            succ[a].push(b);
        }
    }
    let reach = |starts: &[usize]| -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = starts.iter().copied().collect();
        let mut stack = starts.to_vec();
        while let Some(i) = stack.pop() {
            for &j in &succ[i] {
                if seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen
    };
    let clocks: Vec<(usize, f64)> = d
        .blocks
        .iter()
        .enumerate()
        .filter_map(|(i, b)| match b.kind {
            SimKind::EventClock { period, .. } => Some((i, period)),
            _ => None,
        })
        .collect();
    let members = |c: usize| -> Vec<usize> {
        (0..n)
            .filter(|&i| res[i] == Resolution::Resolved(Act::Clock(c)))
            .collect()
    };
    for (x, &(a, pa)) in clocks.iter().enumerate() {
        for &(b, pb) in &clocks[x + 1..] {
            if pa != pb {
                continue;
            }
            let (ra, rb) = (reach(&members(a)), reach(&members(b)));
            if ra.intersection(&rb).next().is_some() {
                r.push(
                    Code::UnsynchronizedClocks,
                    format!("{}, {}", d.blocks[a].name, d.blocks[b].name),
                    "equal periods with a shared data path; activation order is arbitrary",
                );
            }
        }
    }
    r
}

/// Probe name → samples `(time s, value)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub probes: BTreeMap<String, Vec<(f64, f64)>>,
}

impl SimTrace {
    pub fn push(&mut self, probe: &str, t: f64, v: f64) {
        self.probes.entry(probe.to_string()).or_default().push((t, v));
    }

    pub fn last(&self, probe: &str) -> Option<f64> {
        self.probes.get(probe).and_then(|s| s.last()).map(|&(_, v)| v)
    }

    /// Comma-separated table: `time` column then one column per probe, six
    /// decimals, empty cells where a probe has no sample at that time.
    pub fn to_csv(&self) -> String {
        let mut times: Vec<f64> = self.probes.values().flatten().map(|&(t, _)| t).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut out = String::from("time");
        for name in self.probes.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        let mut cursors = vec![0usize; self.probes.len()];
        for t in times {
            let _ = write!(out, "{t:.6}");
            for (k, samples) in self.probes.values().enumerate() {
                out.push(',');
                if let Some(&(ts, v)) = samples.get(cursors[k]) {
                    if ts == t {
                        let _ = write!(out, "{v:.6}");
                        cursors[k] += 1;
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

fn rk4_vec(x: &[f64], h: f64, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, h / 2.0));
    let k3 = f(&add(x, &k2, h / 2.0));
    let k4 = f(&add(x, &k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Whole multiple of `dt`, or `None`.
fn steps_of(value: f64, dt: f64) -> Option<u64> {
    let m = value / dt;
    let r = m.round();
    ((m - r).abs() <= 1e-6 * r.max(1.0) && r >= 0.0).then_some(r as u64)
}

fn pure_output(kind: &SimKind, inputs: &[f64]) -> f64 {
    let x = inputs.first().copied().unwrap_or(0.0);
    match kind {
        SimKind::Constant { value } => *value,
        SimKind::Gain { k } => k * x,
        SimKind::Summation { signs } => signs.iter().zip(inputs).map(|(s, v)| s * v).sum(),
        SimKind::Saturation { min, max } => x.clamp(*min, *max),
        SimKind::Quantizer => x.round(),
        SimKind::StaticMap(p) => static_map(x, p),
        SimKind::DeadTime { .. } => x,
        _ => unreachable!("not a memoryless block"),
    }
}

fn is_pure(kind: &SimKind) -> bool {
    matches!(
        kind,
        SimKind::Constant { .. }
            | SimKind::Gain { .. }
            | SimKind::Summation { .. }
            | SimKind::Saturation { .. }
            | SimKind::Quantizer
            | SimKind::StaticMap(_)
    ) || matches!(kind, SimKind::DeadTime { tau } if *tau == 0.0)
}

/// Fixed-step hybrid simulation from t = 0 to `t_end` seconds. Scopes are
/// the probes; each records whenever it is active.
pub fn simulate(d: &Diagram, t_end: f64, dt: f64) -> Result<SimTrace, HybridError> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(HybridError::Domain(format!("t_end {t_end} and dt {dt} must be positive")));
    }
    let report = d.validate();
    if !report.is_empty() {
        return Err(HybridError::InvalidDiagram(report));
    }
    let mut acts = Vec::with_capacity(d.blocks.len());
    for (i, r) in resolve(d).into_iter().enumerate() {
        let name = || d.blocks[i].name.clone();
        acts.push(match r {
            Resolution::Resolved(a) => Some(a),
            Resolution::Ambiguous => return Err(HybridError::AmbiguousInheritance { block: name() }),
            Resolution::Unresolved if matches!(d.blocks[i].kind, SimKind::EventClock { .. }) => None,
            Resolution::Unresolved => return Err(HybridError::NoActivation { block: name() }),
        });
    }
    let mut clock_steps: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for (i, b) in d.blocks.iter().enumerate() {
        match &b.kind {
            SimKind::EventClock { period, offset } => {
                let (Some(m), Some(o)) = (steps_of(*period, dt), steps_of(*offset, dt)) else {
                    return Err(HybridError::Domain(format!(
                        "clock {} (period {period} s, offset {offset} s) is not a multiple of dt {dt} s",
                        b.name
                    )));
                };
                if m == 0 {
                    return Err(HybridError::Domain(format!("clock {} is faster than dt", b.name)));
                }
                clock_steps.insert(i, (m, o));
            }
            SimKind::Pid(p) => p.check()?,
            SimKind::Pt1 { tau, .. } | SimKind::DeadTime { tau } if !(*tau >= 0.0) => {
                return Err(HybridError::Domain(format!("{} has time constant {tau}", b.name)));
            }
            SimKind::Pt1 { tau, .. } if *tau == 0.0 => {
                return Err(HybridError::Domain(format!("{} needs a positive time constant", b.name)));
            }
            _ => {}
        }
    }
    let order = d.order().expect("validated diagrams have no algebraic loop");
    let src = d.sources();
    let continuous: Vec<usize> = (0..d.blocks.len())
        .filter(|&i| matches!(d.blocks[i].kind, SimKind::Pt1 { .. }) || matches!(d.blocks[i].kind, SimKind::DeadTime { tau } if tau > 0.0))
        .collect();

    let n = d.blocks.len();
    let mut out = vec![0.0; n];
    let mut reg: Vec<f64> = d
        .blocks
        .iter()
        .map(|b| match b.kind {
            SimKind::Register { init } => init,
            _ => 0.0,
        })
        .collect();
    let mut pid = vec![PidState::default(); n];
    let mut x = vec![0.0; continuous.len()];
    let mut trace = SimTrace::default();
    for b in d.blocks.iter().filter(|b| b.kind == SimKind::Scope) {
        trace.probes.insert(b.name.clone(), Vec::new());
    }
    let steps = (t_end / dt + 1e-9).floor() as u64;
    let inputs_of = |i: usize, out: &[f64]| -> Vec<f64> { src[i].iter().map(|&s| out[s]).collect() };

    for step in 0..=steps {
        let t = step as f64 * dt;
        for (k, &i) in continuous.iter().enumerate() {
            out[i] = x[k];
        }
        let mut fired = vec![false; n];
        for &i in &order {
            let active = match &acts[i] {
                None => false,
                Some(Act::Always) | Some(Act::Static) => true,
                Some(Act::Clock(c)) => {
                    let (m, o) = clock_steps[c];
                    step >= o && (step - o) % m == 0
                }
            };
            fired[i] = active;
            if !active || continuous.contains(&i) {
                continue;
            }
            let kind = &d.blocks[i].kind;
            let inputs = inputs_of(i, &out);
            match kind {
                SimKind::Register { .. } => out[i] = reg[i],
                SimKind::Pid(p) => {
                    let (s, u) = pid_step(pid[i], inputs[0] - inputs[1], p);
                    pid[i] = s;
                    out[i] = u;
                }
                SimKind::Scope => trace.push(&d.blocks[i].name, t, inputs[0]),
                SimKind::EventClock { .. } => {}
                _ => out[i] = pure_output(kind, &inputs),
            }
        }
        for i in 0..n {
            if fired[i] && matches!(d.blocks[i].kind, SimKind::Register { .. }) {
                reg[i] = out[src[i][0]];
            }
        }
        if step == steps || continuous.is_empty() {
            continue;
        }
        let held = out.clone();
        x = rk4_vec(&x, dt, |stage| {
            let mut o = held.clone();
            for (k, &i) in continuous.iter().enumerate() {
                o[i] = stage[k];
            }
            for &i in &order {
                if acts[i] == Some(Act::Always) && is_pure(&d.blocks[i].kind) {
                    o[i] = pure_output(&d.blocks[i].kind, &inputs_of(i, &o));
                }
            }
            continuous
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let u = o[src[i][0]];
                    match d.blocks[i].kind {
                        SimKind::Pt1 { k: gain, tau } => lag_rate(stage[k], u, gain, tau),
                        SimKind::DeadTime { tau } => lag_rate(stage[k], u, 1.0, tau),
                        _ => unreachable!("continuous blocks are lags"),
                    }
                })
                .collect()
        });
    }
    Ok(trace)
}
