//! Text Gantt and SVG renderings of schedule tables.

use std::fmt::Write;

use crate::adequation::{EntryKind, ScheduleEntry, ScheduleTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// STU represented by one character cell in text output.
    pub stu_per_cell: u64,
    /// Horizontal scale of SVG output.
    pub px_per_stu: f64,
    pub show_synchros: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            stu_per_cell: 1,
            px_per_stu: 8.0,
            show_synchros: false,
        }
    }
}

fn label(e: &ScheduleEntry) -> &str {
    e.block.as_deref().unwrap_or(&e.id)
}

fn cell(t: u64, per: u64) -> usize {
    ((t + per / 2) / per) as usize
}

fn paint(row: &mut [char], e: &ScheduleEntry, per: u64) {
    let (a, b) = (cell(e.start_stu, per), cell(e.end_stu(), per).min(row.len()));
    if a >= b {
        return;
    }
    match e.kind {
        EntryKind::Wait => row[a..b].fill('·'),
        EntryKind::TimerReserve => row[a..b].fill('?'),
        _ => {
            let mut chars = label(e).chars();
            for c in &mut row[a..b] {
                *c = chars.next().unwrap_or('-');
            }
            if b - a > 1 {
                row[b - 1] = '|';
            }
        }
    }
}

/// Monospaced Gantt chart: one row per lane, a `'` row for timer reservations,
/// then an exact listing of every entry.
pub fn render_text(table: &ScheduleTable, opts: &RenderOptions) -> String {
    let per = opts.stu_per_cell.max(1);
    let cells = table.hyperperiod_stu.div_ceil(per) as usize;
    let name_w = table
        .lanes
        .iter()
        .map(|l| l.name.chars().count() + 1)
        .max()
        .unwrap_or(0)
        .max(4);
    let mut axis = vec![' '; cells + 1];
    let mut i = 0;
    while i <= cells {
        let text = (i as u64 * per).to_string();
        if i + text.len() <= cells + 1 {
            for (k, c) in text.chars().enumerate() {
                axis[i + k] = c;
            }
        }
        i += 10;
    }
    let mut out = String::new();
    let _ = writeln!(out, "{:<name_w$}|{}", "STU", axis.iter().collect::<String>().trim_end());
    if table.lanes.is_empty() {
        return out;
    }
    for lane in &table.lanes {
        let mut row = vec![' '; cells];
        let mut alt = vec![' '; cells];
        let mut has_alt = false;
        for e in table.lane_entries(&lane.name) {
            if e.kind == EntryKind::TimerReserve {
                has_alt = true;
                paint(&mut alt, e, per);
            } else if e.kind != EntryKind::Receive || table.lane_entries(&lane.name).all(|s| s.id != e.id || s.kind != EntryKind::Send) {
                paint(&mut row, e, per);
            }
        }
        let _ = writeln!(out, "{:<name_w$}|{}|", lane.name, row.iter().collect::<String>());
        if has_alt {
            let alt_name = format!("{}'", lane.name);
            let _ = writeln!(out, "{:<name_w$}|{}|", alt_name, alt.iter().collect::<String>());
        }
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "1 cell = {per} STU, boundaries rounded to cells; · wait, ? timer reserve; hyperperiod {} STU",
        table.hyperperiod_stu
    );
    let id_w = table.entries.iter().map(|e| e.id.chars().count()).max().unwrap_or(0);
    for e in &table.entries {
        let what = match (&e.block, &e.payload) {
            (Some(b), _) => b.clone(),
            (None, Some(p)) => format!("{}.{} -> {}.{}", p.producer, p.from_port, p.consumer, p.to_port),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "  {:<id_w$} {:<13} {:<name_w$} [{}, {}) {}",
            e.id,
            e.kind.name(),
            e.lane,
            e.start_stu,
            e.end_stu(),
            what
        );
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn fill(kind: EntryKind) -> &'static str {
    match kind {
        EntryKind::Compute => "#8fb8de",
        EntryKind::Send => "#f4a261",
        EntryKind::Receive => "#e9c46a",
        EntryKind::Wait => "#dddddd",
        EntryKind::TimerReserve => "#c8a2c8",
    }
}

const BAND_H: f64 = 30.0;
const LABEL_W: f64 = 90.0;
const AXIS_H: f64 = 20.0;

/// SVG 1.1 chart with one band per lane and one titled rectangle per entry.
pub fn render_svg(table: &ScheduleTable, opts: &RenderOptions) -> String {
    let px = if opts.px_per_stu > 0.0 { opts.px_per_stu } else { 1.0 };
    let width = LABEL_W + table.hyperperiod_stu as f64 * px + 10.0;
    let height = AXIS_H + table.lanes.len() as f64 * BAND_H + 10.0;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" font-family=\"monospace\" font-size=\"10\">",
        num(width),
        num(height)
    );
    if opts.show_synchros {
        out.push_str("<defs><marker id=\"arrow\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"#333333\"/></marker></defs>\n");
    }
    out.push_str("<g class=\"axis\">\n");
    let x_end = LABEL_W + table.hyperperiod_stu as f64 * px;
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>",
        num(LABEL_W),
        num(AXIS_H),
        num(x_end),
        num(AXIS_H)
    );
    let step = tick_step(table.hyperperiod_stu, px);
    let mut t = 0;
    while t <= table.hyperperiod_stu {
        let x = LABEL_W + t as f64 * px;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{t}</text>",
            num(x),
            num(AXIS_H - 5.0)
        );
        t += step;
    }
    out.push_str("</g>\n");

    let band_y = |i: usize| AXIS_H + i as f64 * BAND_H;
    for (i, lane) in table.lanes.iter().enumerate() {
        let y = band_y(i);
        let _ = writeln!(
            out,
            "<g class=\"lane\"><rect class=\"band\" x=\"0\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/><text x=\"4\" y=\"{}\">{}</text></g>",
            num(y),
            num(width),
            num(BAND_H),
            if i % 2 == 0 { "#f7f7f7" } else { "#ffffff" },
            num(y + BAND_H / 2.0 + 3.0),
            xml_escape(&lane.name)
        );
    }
    for e in &table.entries {
        let Some(i) = table.lanes.iter().position(|l| l.name == e.lane) else {
            continue;
        };
        let (mut y, mut h) = (band_y(i) + 3.0, BAND_H - 6.0);
        match e.kind {
            EntryKind::Send => h /= 2.0,
            EntryKind::Receive => {
                h /= 2.0;
                y += h;
            }
            EntryKind::TimerReserve => {
                y += h * 0.6;
                h *= 0.4;
            }
            _ => {}
        }
        let title = match (&e.block, &e.payload) {
            (Some(b), _) => format!("{} {} {b}", e.id, e.kind.name()),
            (None, Some(p)) => format!(
                "{} {} {}.{} -> {}.{}",
                e.id,
                e.kind.name(),
                p.producer,
                p.from_port,
                p.consumer,
                p.to_port
            ),
            _ => format!("{} {}", e.id, e.kind.name()),
        };
        let _ = writeln!(
            out,
            "<rect class=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.5\"><title>{} start={} duration={}</title></rect>",
            e.kind.name(),
            num(LABEL_W + e.start_stu as f64 * px),
            num(y),
            num(e.duration_stu as f64 * px),
            num(h),
            fill(e.kind),
            xml_escape(&title),
            e.start_stu,
            e.duration_stu
        );
    }
    if opts.show_synchros {
        let centre = |id: &str, at_end: bool| {
            let e = table.entry(id)?;
            let i = table.lanes.iter().position(|l| l.name == e.lane)?;
            let t = if at_end { e.end_stu() } else { e.start_stu };
            Some((LABEL_W + t as f64 * px, band_y(i) + BAND_H / 2.0))
        };
        for s in &table.synchros {
            if let (Some((x1, y1)), Some((x2, y2))) = (centre(&s.from, true), centre(&s.to, false)) {
                let _ = writeln!(
                    out,
                    "<line class=\"synchro {}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" marker-end=\"url(#arrow)\"/>",
                    match s.scope {
                        crate::adequation::SynchroScope::Intra => "intra",
                        crate::adequation::SynchroScope::Inter => "inter",
                    },
                    num(x1),
                    num(y1),
                    num(x2),
                    num(y2)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Tick spacing that keeps labels at least 40 px apart.
fn tick_step(h: u64, px: f64) -> u64 {
    let mut decade = 1u64;
    loop {
        for m in [1, 2, 5] {
            let step = m * decade;
            if step as f64 * px >= 40.0 || step >= h.max(1) {
                return step;
            }
        }
        decade *= 10;
    }
}
