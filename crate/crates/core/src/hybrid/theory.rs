use std::collections::BTreeSet;

use super::HybridError;
use crate::report::{Code, ValidationReport};

/// Sequence of contiguous time intervals `[t_j, t_j']`.
#[derive(Debug, Clone, PartialEq)]
pub enum HybridTimeBasis {
    FiniteList(Vec<(f64, f64)>),
    /// Infinitely many intervals whose lengths form a geometric sequence.
    InfiniteDescr { first: f64, ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBasisClass {
    Trivial,
    Finite,
    Infinite,
    Zeno,
}

pub fn classify_time_basis(b: &HybridTimeBasis) -> Result<TimeBasisClass, HybridError> {
    match b {
        HybridTimeBasis::FiniteList(iv) => {
            let Some(&(t0, t0e)) = iv.first() else {
                return Err(HybridError::Domain("a time basis has at least one interval".into()));
            };
            for (j, &(a, e)) in iv.iter().enumerate() {
                if !(a <= e) {
                    return Err(HybridError::Domain(format!("interval {j} has negative length")));
                }
                if let Some(&(next, _)) = iv.get(j + 1) {
                    if next != e {
                        return Err(HybridError::Domain(format!("interval {j} ends at {e}, next starts at {next}")));
                    }
                }
            }
            Ok(if iv.len() == 1 && t0 == t0e {
                TimeBasisClass::Trivial
            } else {
                TimeBasisClass::Finite
            })
        }
        HybridTimeBasis::InfiniteDescr { first, ratio } => {
            if !(*first >= 0.0) || !(*ratio >= 0.0) {
                return Err(HybridError::Domain(format!(
                    "interval lengths must be non-negative (first {first}, ratio {ratio})"
                )));
            }
            // Infinitely many intervals of finite total length.
            Ok(if *ratio < 1.0 || *first == 0.0 {
                TimeBasisClass::Zeno
            } else {
                TimeBasisClass::Infinite
            })
        }
    }
}

/// `coeff · y_var^(deriv)` on the right-hand side of an equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeTerm {
    pub var: usize,
    pub deriv: usize,
    pub coeff: f64,
}

/// Equation `i` of a system: `leading · y_i^(order) = Σ terms + u_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeEquation {
    pub order: usize,
    pub leading: f64,
    pub terms: Vec<OdeTerm>,
}

/// `x' = A x + B u` with states listed as `(var, deriv)`, grouped by
/// derivative level: all `y_i`, then all `y_i'`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderSystem {
    pub states: Vec<(usize, usize)>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

pub fn ode_to_first_order(eqs: &[OdeEquation]) -> Result<FirstOrderSystem, HybridError> {
    for (i, e) in eqs.iter().enumerate() {
        if e.order == 0 || e.leading == 0.0 || !e.leading.is_finite() {
            return Err(HybridError::Domain(format!(
                "equation {i} needs order >= 1 and a nonzero leading coefficient"
            )));
        }
        for t in &e.terms {
            match eqs.get(t.var) {
                Some(target) if t.deriv < target.order => {}
                _ => {
                    return Err(HybridError::Domain(format!(
                        "equation {i} uses derivative {} of variable {} beyond its state",
                        t.deriv, t.var
                    )))
                }
            }
        }
    }
    let max_order = eqs.iter().map(|e| e.order).max().unwrap_or(0);
    let mut states = Vec::new();
    for level in 0..max_order {
        for (v, e) in eqs.iter().enumerate() {
            if level < e.order {
                states.push((v, level));
            }
        }
    }
    let index = |v: usize, k: usize| states.iter().position(|&s| s == (v, k)).expect("state exists");
    let n = states.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; eqs.len()]; n];
    for (row, &(v, k)) in states.iter().enumerate() {
        let e = &eqs[v];
        if k + 1 < e.order {
            a[row][index(v, k + 1)] = 1.0;
        } else {
            for t in &e.terms {
                a[row][index(t.var, t.deriv)] += t.coeff / e.leading;
            }
            b[row][v] = 1.0 / e.leading;
        }
    }
    Ok(FirstOrderSystem { states, a, b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridTransition {
    pub from: String,
    pub input: String,
    pub to: String,
    /// Predicate over the sampled continuous state, input and disturbance.
    pub guard: String,
    pub reset: String,
}

/// Structural representation of `H = (Q, U_D, E, X, U, V, S, Inv, R, G)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridAutomaton {
    pub states: Vec<String>,
    pub discrete_inputs: Vec<String>,
    pub transitions: Vec<HybridTransition>,
    /// Dynamics tag per state.
    pub dynamics: Vec<(String, String)>,
    pub invariants: Vec<(String, String)>,
}

impl HybridAutomaton {
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new();
        let q: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        let u: BTreeSet<&str> = self.discrete_inputs.iter().map(String::as_str).collect();
        if q.len() != self.states.len() {
            r.push(Code::DuplicateName, "Q", "state listed twice");
        }
        for t in &self.transitions {
            let subject = format!("{} -{}-> {}", t.from, t.input, t.to);
            for end in [&t.from, &t.to] {
                if !q.contains(end.as_str()) {
                    r.push(Code::BadTransition, subject.clone(), format!("{end} is not a state"));
                }
            }
            if !u.contains(t.input.as_str()) {
                r.push(Code::BadTransition, subject, format!("{} is not a discrete input", t.input));
            }
        }
        for (s, _) in self.dynamics.iter().chain(&self.invariants) {
            if !q.contains(s.as_str()) {
                r.push(Code::BadTransition, s, "dynamics or invariant for an unknown state");
            }
        }
        r
    }
}
