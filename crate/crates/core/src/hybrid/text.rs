use std::collections::BTreeMap;

use super::diagram::{Diagram, SimKind};
use super::pid::{chr_tune, PidParams};
use super::plant::PlantParams;
use crate::parse::lexer::{Cursor, PResult, ParseError, ParseErrorCode, SourceSpan, Tok};

/// Parses the diagram text form:
///
/// ```text
/// def diagram fan :
///   block tick : event_clock period=0.005;
///   block ctl : pid ta=330, tu=78, ks=0.925, ts=5 on tick;
///   link setpoint -> ctl.0;
/// end;
/// ```
pub fn parse_diagram(src: &str) -> Result<Diagram, ParseError> {
    let mut c = Cursor::new(src)?;
    c.expect_keyword("def")?;
    c.expect_keyword("diagram")?;
    let (name, _) = c.ident("diagram name")?;
    c.expect(&Tok::Colon)?;
    let mut d = Diagram::new(name);
    loop {
        if c.eat_keyword("end") {
            c.eat(&Tok::Semi);
            break;
        }
        if c.eat_keyword("block") {
            let (name, span) = c.ident("block name")?;
            if d.index(&name).is_some() {
                return Err(ParseError {
                    span,
                    code: ParseErrorCode::DuplicateName,
                    message: format!("block `{name}` declared twice"),
                });
            }
            c.expect(&Tok::Colon)?;
            let (kind, kind_span) = c.ident("block kind")?;
            let params = params(&mut c)?;
            let kind = build(&kind, params, kind_span)?;
            d = d.block(&name, kind);
            if c.eat_keyword("on") {
                let (clock, _) = c.ident("clock name")?;
                d = d.activate(&clock, &name);
            }
            c.expect(&Tok::Semi)?;
        } else if c.eat_keyword("link") {
            let (from, _) = c.ident("source block")?;
            c.expect(&Tok::Arrow)?;
            let (to, _) = c.ident("target block")?;
            c.expect(&Tok::Dot)?;
            let port = c.uint("input index")?;
            c.expect(&Tok::Semi)?;
            d = d.link(&from, &to, port as usize);
        } else {
            return Err(c.unexpected("`block`, `link` or `end`"));
        }
    }
    if !c.at(&Tok::Eof) {
        return Err(c.unexpected("end of input"));
    }
    Ok(d)
}

struct Params {
    values: BTreeMap<String, (f64, SourceSpan)>,
}

impl Params {
    fn take(&mut self, key: &str) -> Option<f64> {
        self.values.remove(key).map(|(v, _)| v)
    }

    fn need(&mut self, key: &str, at: SourceSpan) -> PResult<f64> {
        self.take(key).ok_or_else(|| ParseError {
            span: at,
            code: ParseErrorCode::UnexpectedToken,
            message: format!("missing parameter `{key}`"),
        })
    }

    fn finish(self) -> PResult<()> {
        match self.values.into_iter().next() {
            None => Ok(()),
            Some((k, (_, span))) => Err(ParseError {
                span,
                code: ParseErrorCode::UnexpectedToken,
                message: format!("unknown parameter `{k}`"),
            }),
        }
    }
}

fn params(c: &mut Cursor) -> PResult<Params> {
    let mut values = BTreeMap::new();
    if !(matches!(c.peek(), Tok::Ident(_)) && c.peek_at(1) == &Tok::Eq) {
        return Ok(Params { values });
    }
    loop {
        let (key, span) = c.ident("parameter name")?;
        c.expect(&Tok::Eq)?;
        let v = c.number("parameter value")?;
        if values.insert(key.clone(), (v, span)).is_some() {
            return Err(ParseError {
                span,
                code: ParseErrorCode::DuplicateName,
                message: format!("parameter `{key}` given twice"),
            });
        }
        if !c.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(Params { values })
}

fn build(kind: &str, mut p: Params, at: SourceSpan) -> PResult<SimKind> {
    let kind = match kind {
        "constant" => SimKind::Constant { value: p.need("value", at)? },
        "gain" => SimKind::Gain { k: p.need("k", at)? },
        "summation" => {
            let mut signs = Vec::new();
            while let Some(s) = p.take(&format!("s{}", signs.len())) {
                signs.push(s);
            }
            if signs.is_empty() {
                return Err(ParseError {
                    span: at,
                    code: ParseErrorCode::UnexpectedToken,
                    message: "summation needs signs s0, s1, ...".into(),
                });
            }
            SimKind::Summation { signs }
        }
        "saturation" => SimKind::Saturation {
            min: p.need("min", at)?,
            max: p.need("max", at)?,
        },
        "quantizer" => SimKind::Quantizer,
        "register" => SimKind::Register {
            init: p.take("init").unwrap_or(0.0),
        },
        "pt1" => SimKind::Pt1 {
            k: p.need("k", at)?,
            tau: p.need("tau", at)?,
        },
        "deadtime" => SimKind::DeadTime { tau: p.need("tau", at)? },
        "static_map" => {
            let d = PlantParams::default();
            SimKind::StaticMap(PlantParams {
                cutoff_pct: p.take("cutoff").unwrap_or(d.cutoff_pct),
                rpm_scale: p.take("scale").unwrap_or(d.rpm_scale),
                rpm_max: p.take("max").unwrap_or(d.rpm_max),
                ..d
            })
        }
        "pid" => {
            let ts = p.need("ts", at)?;
            let base = if p.values.contains_key("ta") {
                let (ta, tu, ks) = (p.need("ta", at)?, p.need("tu", at)?, p.need("ks", at)?);
                chr_tune(ta, tu, ks).map_err(|e| ParseError {
                    span: at,
                    code: ParseErrorCode::BadNumber,
                    message: e.to_string(),
                })?
            } else {
                PidParams::from_gains(p.need("kp", at)?, p.need("ki", at)?, p.need("kd", at)?, ts)
            };
            let u_min = p.take("umin").unwrap_or(base.u_min);
            let u_max = p.take("umax").unwrap_or(base.u_max);
            SimKind::Pid(base.with_ts(ts).with_limits(u_min, u_max))
        }
        "event_clock" => SimKind::EventClock {
            period: p.need("period", at)?,
            offset: p.take("offset").unwrap_or(0.0),
        },
        "scope" => SimKind::Scope,
        other => {
            return Err(ParseError {
                span: at,
                code: ParseErrorCode::UnexpectedToken,
                message: format!("unknown block kind `{other}`"),
            })
        }
    };
    p.finish()?;
    Ok(kind)
}
