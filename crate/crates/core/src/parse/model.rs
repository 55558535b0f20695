use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{Cursor, PResult, ParseError, ParseErrorCode, SourceSpan, Tok};
use crate::model::{
    builtin_type, validate_algorithm, validate_architecture, AlgorithmGraph, ArchitectureGraph,
    Block, BlockKind, DataType, Dependency, Direction, GateRef, Medium, MediumKind, Operator, Port,
    PortRef,
};
use crate::report::ValidationReport;

/// Super blocks nested deeper than this are rejected instead of recursing further.
const MAX_DEPTH: usize = 64;

/// A parsed model with the semantic findings of its validator.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub model: T,
    pub findings: ValidationReport,
}

pub fn parse_algorithm(src: &str) -> Result<Parsed<AlgorithmGraph>, ParseError> {
    let mut cur = Cursor::new(src)?;
    cur.expect_keyword("def")?;
    cur.expect_keyword("algorithm")?;
    let (name, _) = cur.ident("algorithm name")?;
    let mut g = AlgorithmGraph::new(name);
    if cur.eat_keyword("period") {
        g.period_stu = Some(cur.positive("period")?);
    }
    cur.expect(&Tok::Colon)?;
    let mut types = TypeScope::default();
    let mut port_names = BTreeSet::new();
    loop {
        match cur.peek() {
            Tok::Eof => break,
            Tok::Ident(w) if w == "end" && matches!(cur.peek_at(1), Tok::Semi | Tok::Eof) => {
                cur.next();
                cur.eat(&Tok::Semi);
                if !cur.at(&Tok::Eof) {
                    return Err(cur.unexpected("end of input after `end;`"));
                }
                break;
            }
            Tok::Ident(w) if w == "typedef" => {
                cur.next();
                let span = cur.span();
                let (tname, _) = cur.ident("type name")?;
                let size = cur.positive_u32("type size")?;
                cur.expect(&Tok::Semi)?;
                if !types.declared.insert(tname.clone()) {
                    return Err(dup(span, &format!("type `{tname}`")));
                }
                g.dtypes.push(DataType::new(tname, size));
            }
            Tok::Question | Tok::Bang => {
                let span = cur.span();
                let port = port_item(&mut cur, &types, g.ports.len())?;
                cur.expect(&Tok::Semi)?;
                if !port_names.insert((port.name.clone(), port.direction)) {
                    return Err(dup(span, &format!("port `{}`", port.name)));
                }
                g.ports.push(port);
            }
            _ => {
                let item = graph_item(&mut cur, &types, 0)?;
                push_item(&mut g, item)?;
            }
        }
    }
    let findings = validate_algorithm(&g);
    Ok(Parsed { model: g, findings })
}

fn dup(span: SourceSpan, what: &str) -> ParseError {
    ParseError {
        span,
        code: ParseErrorCode::DuplicateName,
        message: format!("{what} declared twice"),
    }
}

#[derive(Default)]
struct TypeScope {
    declared: BTreeSet<String>,
}

impl TypeScope {
    fn knows(&self, name: &str) -> bool {
        self.declared.contains(name) || builtin_type(name).is_some()
    }
}

enum Item {
    Block(Block, SourceSpan),
    Dep(Dependency),
}

fn push_item(g: &mut AlgorithmGraph, item: Item) -> PResult<()> {
    match item {
        Item::Block(b, span) => {
            if g.block(&b.name).is_some() {
                return Err(dup(span, &format!("block `{}`", b.name)));
            }
            g.blocks.push(b);
        }
        Item::Dep(d) => g.deps.push(d),
    }
    Ok(())
}

fn graph_item(cur: &mut Cursor, types: &TypeScope, depth: usize) -> PResult<Item> {
    let word = match cur.peek() {
        Tok::Ident(w) => w.clone(),
        _ => return Err(cur.unexpected("block, dependency or `end`")),
    };
    match cur.peek_at(1) {
        Tok::Dot => return data_dep(cur).map(Item::Dep),
        Tok::Tilde => {
            let (from, _) = cur.ident("block name")?;
            cur.expect(&Tok::Tilde)?;
            let (to, _) = cur.ident("block name")?;
            cur.expect(&Tok::Semi)?;
            return Ok(Item::Dep(Dependency::precedence(from, to)));
        }
        _ => {}
    }
    let Some(kind) = BlockKind::from_keyword(&word) else {
        return Err(cur.unexpected("block kind, dependency or `end`"));
    };
    cur.next();
    let (name, span) = cur.ident("block name")?;
    let mut block = Block::new(name, kind);
    cur.expect(&Tok::Colon)?;
    let mut port_names = BTreeSet::new();
    while matches!(cur.peek(), Tok::Question | Tok::Bang) {
        let pspan = cur.span();
        let port = port_item(cur, types, block.ports.len())?;
        if !port_names.insert((port.name.clone(), port.direction)) {
            return Err(dup(pspan, &format!("port `{}`", port.name)));
        }
        block.ports.push(port);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    let mut seen = BTreeSet::new();
    loop {
        let (opt, ospan) = match cur.peek() {
            Tok::Ident(w) => (w.clone(), cur.span()),
            _ => break,
        };
        if !seen.insert(opt.clone()) {
            return Err(ParseError {
                span: ospan,
                code: ParseErrorCode::UnexpectedToken,
                message: format!("option `{opt}` given twice"),
            });
        }
        match opt.as_str() {
            "period" => {
                cur.next();
                block.period_stu = Some(cur.positive("period")?);
            }
            "constraint" => {
                cur.next();
                block.constraint = Some(cur.ident("operator name")?.0);
            }
            "duration" => {
                cur.next();
                block.durations = assignments(cur, "duration", |c| c.positive("duration"))?;
            }
            "param" => {
                cur.next();
                block.params = assignments(cur, "parameter", |c| c.number("parameter value"))?;
            }
            "condition" if kind == BlockKind::Super => {
                cur.next();
                block.condition = Some(cur.ident("condition port")?.0);
            }
            _ => return Err(cur.unexpected("block option or `;`")),
        }
    }
    if kind == BlockKind::Super {
        if depth >= MAX_DEPTH {
            return Err(cur.error(ParseErrorCode::UnexpectedToken, "super blocks nested too deeply"));
        }
        cur.expect(&Tok::LBrace)?;
        let mut body = AlgorithmGraph::new(block.name.clone());
        while !cur.at(&Tok::RBrace) {
            if cur.at(&Tok::Eof) {
                return Err(cur.unexpected("`}`"));
            }
            let item = graph_item(cur, types, depth + 1)?;
            push_item(&mut body, item)?;
        }
        cur.next();
        cur.eat(&Tok::Semi);
        block.body = Some(Box::new(body));
    } else {
        cur.expect(&Tok::Semi)?;
    }
    Ok(Item::Block(block, span))
}

fn assignments<T>(
    cur: &mut Cursor,
    what: &str,
    value: impl Fn(&mut Cursor) -> PResult<T>,
) -> PResult<BTreeMap<String, T>> {
    let mut out = BTreeMap::new();
    loop {
        let (key, span) = cur.ident(&format!("{what} key"))?;
        cur.expect(&Tok::Eq)?;
        let v = value(cur)?;
        if out.insert(key.clone(), v).is_some() {
            return Err(dup(span, &format!("{what} `{key}`")));
        }
        if !cur.eat(&Tok::Comma) {
            return Ok(out);
        }
    }
}

fn port_item(cur: &mut Cursor, types: &TypeScope, index: usize) -> PResult<Port> {
    let direction = if cur.eat(&Tok::Question) {
        Direction::Input
    } else {
        cur.expect(&Tok::Bang)?;
        Direction::Output
    };
    let (dtype, tspan) = cur.ident("data type")?;
    if !types.knows(&dtype) {
        return Err(ParseError {
            span: tspan,
            code: ParseErrorCode::UnknownType,
            message: format!("unknown data type `{dtype}`"),
        });
    }
    let width = if cur.eat(&Tok::LBracket) {
        let w = cur.positive_u32("width")?;
        cur.expect(&Tok::RBracket)?;
        w
    } else {
        1
    };
    let (name, _) = cur.ident("port name")?;
    let rank = if matches!(cur.peek(), Tok::Int(_) | Tok::Decimal(_)) {
        cur.positive_u32("rank")?
    } else {
        u32::try_from(index + 1).unwrap_or(u32::MAX)
    };
    Ok(Port {
        name,
        direction,
        dtype,
        width,
        rank,
    })
}

fn data_dep(cur: &mut Cursor) -> PResult<Dependency> {
    let from = port_ref(cur)?;
    cur.expect(&Tok::Arrow)?;
    let to = port_ref(cur)?;
    cur.expect(&Tok::Semi)?;
    Ok(Dependency::data(from, to))
}

fn port_ref(cur: &mut Cursor) -> PResult<PortRef> {
    let (block, _) = cur.ident("block name")?;
    cur.expect(&Tok::Dot)?;
    let (port, _) = cur.ident("port name")?;
    Ok(PortRef::new(block, port))
}

pub fn parse_architecture(src: &str) -> Result<Parsed<ArchitectureGraph>, ParseError> {
    let mut cur = Cursor::new(src)?;
    cur.expect_keyword("def")?;
    cur.expect_keyword("architecture")?;
    let (name, _) = cur.ident("architecture name")?;
    cur.expect(&Tok::Colon)?;
    let mut a = ArchitectureGraph::new(name);
    let mut names = BTreeSet::new();
    loop {
        match cur.peek() {
            Tok::Eof => break,
            Tok::Ident(w) if w == "end" => {
                cur.next();
                cur.eat(&Tok::Semi);
                if !cur.at(&Tok::Eof) {
                    return Err(cur.unexpected("end of input after `end;`"));
                }
                break;
            }
            Tok::Ident(w) if w == "operator" => {
                cur.next();
                let (name, span) = cur.ident("operator name")?;
                if !names.insert(name.clone()) {
                    return Err(dup(span, &format!("`{name}`")));
                }
                a.operators.push(operator_body(&mut cur, name)?);
            }
            Tok::Ident(w) if w == "medium" => {
                cur.next();
                let (name, span) = cur.ident("medium name")?;
                if !names.insert(name.clone()) {
                    return Err(dup(span, &format!("`{name}`")));
                }
                a.media.push(medium_body(&mut cur, name)?);
            }
            _ => return Err(cur.unexpected("`operator`, `medium` or `end`")),
        }
    }
    let findings = validate_architecture(&a);
    Ok(Parsed { model: a, findings })
}

fn operator_body(cur: &mut Cursor, name: String) -> PResult<Operator> {
    cur.expect(&Tok::Colon)?;
    cur.expect_keyword("type")?;
    let (op_type, _) = cur.ident("operator type")?;
    cur.expect_keyword("clock")?;
    let clock_span = cur.span();
    let clock_hz = cur.number("clock frequency")?;
    if clock_hz <= 0.0 {
        return Err(ParseError {
            span: clock_span,
            code: ParseErrorCode::BadNumber,
            message: "clock frequency must be positive".into(),
        });
    }
    cur.expect_keyword("stu")?;
    let cycles_per_stu = cur.positive("cycles per STU")?;
    let mut gates = Vec::new();
    if cur.eat_keyword("gates") {
        loop {
            gates.push(cur.ident("gate name")?.0);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
    }
    cur.expect(&Tok::Semi)?;
    Ok(Operator {
        name,
        op_type,
        gates,
        clock_hz,
        cycles_per_stu,
    })
}

fn medium_body(cur: &mut Cursor, name: String) -> PResult<Medium> {
    cur.expect(&Tok::Colon)?;
    cur.expect_keyword("kind")?;
    let (kind_word, kspan) = cur.ident("medium kind")?;
    let kind = MediumKind::from_keyword(&kind_word).ok_or_else(|| ParseError {
        span: kspan,
        code: ParseErrorCode::UnexpectedToken,
        message: format!("unknown medium kind `{kind_word}` (sam_ptp, sam_multi or ram)"),
    })?;
    let mut m = Medium::new(name, kind);
    m.broadcast = cur.eat_keyword("broadcast");
    cur.expect_keyword("attach")?;
    loop {
        let (op, _) = cur.ident("operator name")?;
        cur.expect(&Tok::Dot)?;
        let (gate, _) = cur.ident("gate name")?;
        m.attach.push(GateRef::new(op, gate));
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    if cur.eat_keyword("duration") {
        m.transfer_duration = assignments(cur, "transfer duration", |c| c.positive("duration"))?;
    }
    cur.expect(&Tok::Semi)?;
    Ok(m)
}
