//! Target-independent macro programs built from schedule tables, their
//! communication restructuring, merging, and expansion to target source.

mod emit;
mod expand;
mod transform;

use std::fmt;

use thiserror::Error;

pub use emit::{buffer_name, emit_macros};
pub use expand::{expand, TargetDefinition, PLACEHOLDER_SIGIL};
pub use transform::{merge_programs, sequentialize_comm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("SEQUENTIALIZE_CONFLICT: transfer {transfer} on {operator} overlaps {block}")]
    SequentializeConflict {
        operator: String,
        transfer: String,
        block: String,
    },
    #[error("MERGE_COLLISION: {name} appears twice after prefixing")]
    MergeCollision { name: String },
    #[error("MERGE_OPERATOR: programs for {expected} and {found} cannot be merged")]
    MergeOperator { expected: String, found: String },
    #[error("MISSING_TEMPLATE: no template for {key}")]
    MissingTemplate { key: String },
    #[error("MISSING_TYPE_MAP: no target type for {dtype}")]
    MissingTypeMap { dtype: String },
    #[error("SYNTAX: line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl CodegenError {
    pub fn code(&self) -> &'static str {
        match self {
            CodegenError::SequentializeConflict { .. } => "SEQUENTIALIZE_CONFLICT",
            CodegenError::MergeCollision { .. } => "MERGE_COLLISION",
            CodegenError::MergeOperator { .. } => "MERGE_OPERATOR",
            CodegenError::MissingTemplate { .. } => "MISSING_TEMPLATE",
            CodegenError::MissingTypeMap { .. } => "MISSING_TYPE_MAP",
            CodegenError::Syntax { .. } => "SYNTAX",
        }
    }
}

/// One macro call. `span` is the schedule interval the statement came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroStatement {
    pub name: String,
    pub args: Vec<String>,
    pub span: Option<(u64, u64)>,
}

impl MacroStatement {
    pub fn new<S: Into<String>>(name: &str, args: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            args: args.into_iter().map(Into::into).collect(),
            span: None,
        }
    }

    pub fn at(mut self, start: u64, end: u64) -> Self {
        self.span = Some((start, end));
        self
    }
}

impl fmt::Display for MacroStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(","))?;
        if let Some((a, b)) = self.span {
            write!(f, " # [{a},{b})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CommDirection {
    Send,
    Recv,
}

impl CommDirection {
    pub fn macro_name(self) -> &'static str {
        match self {
            CommDirection::Send => "send_",
            CommDirection::Recv => "recv_",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommOp {
    pub direction: CommDirection,
    /// Transfer entry id.
    pub payload: String,
    /// Receivers joined by `+` for sends, the sender for receives.
    pub peer: String,
    pub buffer: String,
    pub pre: Option<String>,
    pub suc: Option<String>,
    pub span: (u64, u64),
}

impl CommOp {
    pub fn statement(&self, medium: &str) -> MacroStatement {
        let mut args = vec![
            medium.to_string(),
            self.payload.clone(),
            self.peer.clone(),
            self.buffer.clone(),
        ];
        args.extend(self.pre.clone());
        args.extend(self.suc.clone());
        MacroStatement::new(self.direction.macro_name(), args).at(self.span.0, self.span.1)
    }
}

/// Per-medium communication thread (or, once sequentialized, a selector
/// function switching on the payload id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommSequencer {
    pub medium: String,
    pub gate: String,
    pub members: Vec<String>,
    pub ops: Vec<CommOp>,
    pub selector: bool,
}

impl CommSequencer {
    pub fn header(&self) -> MacroStatement {
        let name = if self.selector { "selector_" } else { "thread_" };
        let mut args = vec![self.medium.clone(), self.gate.clone()];
        args.extend(self.members.iter().cloned());
        MacroStatement::new(name, args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MacroProgram {
    pub operator: String,
    pub allocs: Vec<MacroStatement>,
    pub init: Vec<MacroStatement>,
    pub main_loop: Vec<MacroStatement>,
    pub end: Vec<MacroStatement>,
    pub sequencers: Vec<CommSequencer>,
    /// Loop iteration bound; `None` loops forever.
    pub iterations: Option<u64>,
    /// Free-text remarks written as comments (inter-repetition synchros).
    pub notes: Vec<String>,
}

impl MacroProgram {
    pub fn to_m4k(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("processor_({})", self.operator));
        for n in &self.notes {
            line(format!("# {n}"));
        }
        for s in &self.allocs {
            line(s.to_string());
        }
        for seq in &self.sequencers {
            line(seq.header().to_string());
            for op in &seq.ops {
                line(op.statement(&seq.medium).to_string());
            }
            line("endthread_".into());
        }
        line("main_".into());
        for s in &self.init {
            line(s.to_string());
        }
        line(match self.iterations {
            Some(n) => format!("loop_n({n})"),
            None => "loop_".into(),
        });
        for s in &self.main_loop {
            line(s.to_string());
        }
        line("endloop_".into());
        for s in &self.end {
            line(s.to_string());
        }
        line("endmain_".into());
        out
    }

    pub fn from_m4k(text: &str) -> Result<Self, CodegenError> {
        #[derive(PartialEq)]
        enum At {
            Top,
            Thread,
            Init,
            Loop,
            End,
            Done,
        }
        let mut prog = MacroProgram::default();
        let mut at = At::Top;
        let mut seen_processor = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| CodegenError::Syntax { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(note) = trimmed.strip_prefix('#') {
                if at == At::Top {
                    prog.notes.push(note.trim().to_string());
                }
                continue;
            }
            let stmt = parse_statement(trimmed).map_err(err)?;
            match (stmt.name.as_str(), &at) {
                ("processor_", At::Top) if !seen_processor => {
                    let [op] = stmt.args.as_slice() else {
                        return Err(err("processor_ takes one argument".into()));
                    };
                    prog.operator = op.clone();
                    seen_processor = true;
                }
                ("alloc_", At::Top) => prog.allocs.push(stmt),
                ("thread_" | "selector_", At::Top) => {
                    if stmt.args.len() < 2 {
                        return Err(err("sequencer header needs a medium and a gate".into()));
                    }
                    prog.sequencers.push(CommSequencer {
                        medium: stmt.args[0].clone(),
                        gate: stmt.args[1].clone(),
                        members: stmt.args[2..].to_vec(),
                        ops: Vec::new(),
                        selector: stmt.name == "selector_",
                    });
                    at = At::Thread;
                }
                ("send_" | "recv_", At::Thread) => {
                    let seq = prog.sequencers.last_mut().expect("inside a sequencer");
                    let a = &stmt.args;
                    if !(a.len() == 4 || a.len() == 6) || a[0] != seq.medium {
                        return Err(err(format!("malformed {} in sequencer {}", stmt.name, seq.medium)));
                    }
                    let Some(span) = stmt.span else {
                        return Err(err("sequencer operation without a schedule interval".into()));
                    };
                    seq.ops.push(CommOp {
                        direction: if stmt.name == "send_" {
                            CommDirection::Send
                        } else {
                            CommDirection::Recv
                        },
                        payload: a[1].clone(),
                        peer: a[2].clone(),
                        buffer: a[3].clone(),
                        pre: a.get(4).cloned(),
                        suc: a.get(5).cloned(),
                        span,
                    });
                }
                ("endthread_", At::Thread) => at = At::Top,
                ("main_", At::Top) => at = At::Init,
                ("loop_", At::Init) => at = At::Loop,
                ("loop_n", At::Init) => {
                    let n = stmt
                        .args
                        .first()
                        .and_then(|a| a.parse().ok())
                        .ok_or_else(|| err("loop_n needs an iteration count".into()))?;
                    prog.iterations = Some(n);
                    at = At::Loop;
                }
                ("endloop_", At::Loop) => at = At::End,
                ("endmain_", At::End) => at = At::Done,
                (_, At::Init) => prog.init.push(stmt),
                (_, At::Loop) => prog.main_loop.push(stmt),
                (_, At::End) => prog.end.push(stmt),
                (name, _) => return Err(err(format!("unexpected {name}"))),
            }
        }
        if !seen_processor || at != At::Done {
            return Err(CodegenError::Syntax {
                line: text.lines().count(),
                message: "incomplete program".into(),
            });
        }
        Ok(prog)
    }
}

fn parse_statement(text: &str) -> Result<MacroStatement, String> {
    let (call, span) = match text.split_once('#') {
        Some((call, comment)) => (call.trim(), Some(parse_span(comment.trim())?)),
        None => (text, None),
    };
    let valid_name = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    let stmt = match call.split_once('(') {
        None if valid_name(call) => MacroStatement::new::<String>(call, []),
        None => return Err(format!("bad statement `{call}`")),
        Some((name, rest)) => {
            let Some(inner) = rest.strip_suffix(')') else {
                return Err(format!("unclosed argument list in `{call}`"));
            };
            if !valid_name(name) || inner.contains(['(', ')']) {
                return Err(format!("bad statement `{call}`"));
            }
            let args: Vec<&str> = if inner.is_empty() { Vec::new() } else { inner.split(',').collect() };
            MacroStatement::new(name, args)
        }
    };
    Ok(MacroStatement { span, ..stmt })
}

fn parse_span(text: &str) -> Result<(u64, u64), String> {
    let bad = || format!("bad interval `{text}`");
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_syntax() {
        let s = parse_statement("alloc_(uint16,a_b_buf,1)").unwrap();
        assert_eq!(s, MacroStatement::new("alloc_", ["uint16", "a_b_buf", "1"]));
        let s = parse_statement("loop_call(x) # [3,5)").unwrap();
        assert_eq!(s.span, Some((3, 5)));
        assert_eq!(parse_statement("main_").unwrap().args.len(), 0);
        assert!(parse_statement("f(a").is_err());
        assert!(parse_statement("f(a) # 3").is_err());
    }

    #[test]
    fn incomplete_program_rejected() {
        assert!(MacroProgram::from_m4k("processor_(p)\nmain_\n").is_err());
        assert!(MacroProgram::from_m4k("main_\nloop_\nendloop_\nendmain_\n").is_err());
    }
}
