use std::collections::BTreeMap;

use super::{CodegenError, MacroProgram, MacroStatement};

/// Marks placeholders in templates: `$1`..`$n` are arguments, `$tN` the
/// target type of argument N, `$@` all arguments, `$0` the macro name and
/// `$$` a literal sigil.
pub const PLACEHOLDER_SIGIL: char = '$';

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetDefinition {
    pub name: String,
    pub type_map: BTreeMap<String, String>,
    /// (macro, phase) → template text.
    pub templates: BTreeMap<(String, String), String>,
    pub prologue: String,
    pub epilogue: String,
}

impl TargetDefinition {
    pub fn with_type(mut self, dtype: &str, text: &str) -> Self {
        self.type_map.insert(dtype.into(), text.into());
        self
    }

    pub fn with_template(mut self, macro_name: &str, phase: &str, text: &str) -> Self {
        self.templates.insert((macro_name.into(), phase.into()), text.into());
        self
    }

    /// Reads the `.tdef` layout: `[target name]`, `[types]` with
    /// `name = text` lines, `[template macro:phase]` bodies ending at a blank
    /// line, and free-form `[prologue]` / `[epilogue]` sections.
    pub fn parse(text: &str) -> Result<Self, CodegenError> {
        enum Section {
            None,
            Types,
            Template(String, String),
            Closed,
            Prologue,
            Epilogue,
        }
        let mut def = TargetDefinition::default();
        let mut section = Section::None;
        let mut body: Vec<&str> = Vec::new();
        let flush = |section: &Section, body: &mut Vec<&str>, def: &mut TargetDefinition| {
            let text = body.join("\n");
            match section {
                Section::Template(m, p) => {
                    def.templates.insert((m.clone(), p.clone()), text);
                }
                Section::Prologue => def.prologue = trim_block(&text),
                Section::Epilogue => def.epilogue = trim_block(&text),
                _ => {}
            }
            body.clear();
        };
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| CodegenError::Syntax { line: i + 1, message };
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.trim_end().strip_suffix(']')) {
                flush(&section, &mut body, &mut def);
                let mut words = header.split_whitespace();
                section = match (words.next(), words.next(), words.next()) {
                    (Some("target"), Some(name), None) => {
                        def.name = name.to_string();
                        Section::Closed
                    }
                    (Some("types"), None, None) => Section::Types,
                    (Some("prologue"), None, None) => Section::Prologue,
                    (Some("epilogue"), None, None) => Section::Epilogue,
                    (Some("template"), Some(key), None) => {
                        let Some((m, p)) = key.split_once(':') else {
                            return Err(err(format!("template key `{key}` needs macro:phase")));
                        };
                        if def.templates.contains_key(&(m.to_string(), p.to_string())) {
                            return Err(err(format!("template {key} defined twice")));
                        }
                        Section::Template(m.into(), p.into())
                    }
                    _ => return Err(err(format!("unknown section [{header}]"))),
                };
                continue;
            }
            match &section {
                Section::Types => {
                    let t = line.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    let Some((k, v)) = t.split_once('=') else {
                        return Err(err(format!("expected `type = text`, found `{t}`")));
                    };
                    def.type_map.insert(k.trim().into(), v.trim().into());
                }
                Section::Template(..) if line.trim().is_empty() => {
                    flush(&section, &mut body, &mut def);
                    section = Section::Closed;
                }
                Section::Template(..) | Section::Prologue | Section::Epilogue => body.push(line),
                Section::None | Section::Closed => {
                    let t = line.trim();
                    if !(t.is_empty() || t.starts_with('#')) {
                        return Err(err(format!("text outside a section: `{t}`")));
                    }
                }
            }
        }
        flush(&section, &mut body, &mut def);
        Ok(def)
    }

    fn render(&self, stmt: &MacroStatement, phase: &str, indent: usize, out: &mut String) -> Result<(), CodegenError> {
        let template = self
            .templates
            .get(&(stmt.name.clone(), phase.to_string()))
            .ok_or_else(|| CodegenError::MissingTemplate {
                key: format!("{}:{phase}", stmt.name),
            })?;
        let text = substitute(template, &stmt.name, &stmt.args, &self.type_map)?;
        for line in text.lines() {
            if !line.is_empty() {
                out.extend(std::iter::repeat_n(' ', indent));
            }
            out.push_str(line);
            out.push('\n');
        }
        Ok(())
    }
}

fn trim_block(text: &str) -> String {
    text.trim_matches('\n').to_string()
}

fn substitute(
    template: &str,
    name: &str,
    args: &[String],
    types: &BTreeMap<String, String>,
) -> Result<String, CodegenError> {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.chars().peekable();
    let arg = |n: usize| -> &str {
        match n {
            0 => name,
            n => args.get(n - 1).map(String::as_str).unwrap_or(""),
        }
    };
    let number = |chars: &mut std::iter::Peekable<std::str::Chars>| {
        let mut n = 0usize;
        while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
            n = n * 10 + d as usize;
            chars.next();
        }
        n
    };
    while let Some(c) = chars.next() {
        if c != PLACEHOLDER_SIGIL {
            out.push(c);
            continue;
        }
        match chars.peek().copied() {
            Some('$') => {
                chars.next();
                out.push('$');
            }
            Some('@') => {
                chars.next();
                out.push_str(&args.join(", "));
            }
            Some(d) if d.is_ascii_digit() => {
                let n = number(&mut chars);
                out.push_str(arg(n));
            }
            Some('t') => {
                let mut look = chars.clone();
                look.next();
                if look.peek().is_some_and(|d| d.is_ascii_digit()) {
                    chars.next();
                    let dtype = arg(number(&mut chars));
                    let mapped = types.get(dtype).ok_or_else(|| CodegenError::MissingTypeMap {
                        dtype: dtype.to_string(),
                    })?;
                    out.push_str(mapped);
                } else {
                    out.push('$');
                }
            }
            _ => out.push('$'),
        }
    }
    Ok(out)
}

/// Target source for one program: prologue, declarations, communication
/// functions, init calls, the main loop, end calls and epilogue.
pub fn expand(prog: &MacroProgram, target: &TargetDefinition) -> Result<String, CodegenError> {
    for a in &prog.allocs {
        let dtype = a.args.first().cloned().unwrap_or_default();
        if !target.type_map.contains_key(&dtype) {
            return Err(CodegenError::MissingTypeMap { dtype });
        }
    }
    let mut out = String::new();
    let op = std::slice::from_ref(&prog.operator);
    if !target.prologue.is_empty() {
        out.push_str(&substitute(&target.prologue, "prologue", op, &target.type_map)?);
        out.push('\n');
    }
    for a in &prog.allocs {
        target.render(a, "alloc", 0, &mut out)?;
    }
    for seq in &prog.sequencers {
        target.render(&seq.header(), "comm", 0, &mut out)?;
        for o in &seq.ops {
            target.render(&o.statement(&seq.medium), "comm", 4, &mut out)?;
        }
        target.render(&MacroStatement::new("endthread_", [seq.medium.clone()]), "comm", 0, &mut out)?;
    }
    target.render(&MacroStatement::new("main_", op.to_vec()), "init", 0, &mut out)?;
    for s in &prog.init {
        target.render(s, "init", 4, &mut out)?;
    }
    let head = match prog.iterations {
        Some(n) => MacroStatement::new("loop_n", [n.to_string()]),
        None => MacroStatement::new::<String>("loop_", []),
    };
    target.render(&head, "loop", 4, &mut out)?;
    for s in &prog.main_loop {
        target.render(s, "loop", 8, &mut out)?;
    }
    target.render(&MacroStatement::new::<String>("endloop_", []), "loop", 4, &mut out)?;
    for s in &prog.end {
        target.render(s, "end", 4, &mut out)?;
    }
    target.render(&MacroStatement::new("endmain_", op.to_vec()), "end", 0, &mut out)?;
    if !target.epilogue.is_empty() {
        out.push_str(&substitute(&target.epilogue, "epilogue", op, &target.type_map)?);
        out.push('\n');
    }
    Ok(out)
}
