mod support;

use adequa::adequation::{adequate, insert_waits, EntryKind, ScheduleTable};
use adequa::render::{render_svg, render_text, RenderOptions};
use proptest::prelude::*;
use roxmltree::Document;
use support::{example, instance};

const LABEL_W: f64 = 90.0;
/// Coordinates are written with three decimals.
const EPS: f64 = 5e-4;

fn opts(px: f64, synchros: bool) -> RenderOptions {
    RenderOptions {
        stu_per_cell: 1,
        px_per_stu: px,
        show_synchros: synchros,
    }
}

fn class_of<'a>(n: &roxmltree::Node<'a, '_>) -> &'a str {
    n.attribute("class").unwrap_or("")
}

fn f(n: &roxmltree::Node, attr: &str) -> f64 {
    n.attribute(attr).unwrap().parse().unwrap()
}

/// Structural checks every SVG chart must pass.
fn check_svg(table: &ScheduleTable, px: f64) -> Result<(), TestCaseError> {
    let svg = render_svg(table, &opts(px, true));
    let doc = Document::parse(&svg).map_err(|e| TestCaseError::fail(format!("malformed SVG: {e}")))?;
    let root = doc.root_element();
    prop_assert_eq!(root.tag_name().name(), "svg");
    prop_assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));

    let bands = root.descendants().filter(|n| class_of(n) == "band").count();
    prop_assert_eq!(bands, table.lanes.len());

    let rects: Vec<_> = root
        .descendants()
        .filter(|n| n.has_tag_name("rect") && class_of(n) != "band")
        .collect();
    prop_assert_eq!(rects.len(), table.entries.len());
    for (r, e) in rects.iter().zip(&table.entries) {
        prop_assert_eq!(class_of(r), e.kind.name());
        prop_assert!((f(r, "x") - (LABEL_W + e.start_stu as f64 * px)).abs() < EPS);
        prop_assert!((f(r, "width") - e.duration_stu as f64 * px).abs() < EPS);
        let title = r.first_element_child().and_then(|t| t.text()).unwrap_or("");
        prop_assert!(title.starts_with(&format!("{} ", e.id)), "{}", title);
    }

    let lines = root
        .descendants()
        .filter(|n| n.has_tag_name("line") && class_of(n).starts_with("synchro"))
        .count();
    let drawable = table
        .synchros
        .iter()
        .filter(|s| table.entry(&s.from).is_some() && table.entry(&s.to).is_some())
        .count();
    prop_assert_eq!(lines, drawable);
    Ok(())
}

/// Width of the chart area of a lane row, between the first and last bar.
fn cells(row: &str) -> u64 {
    let chars: Vec<char> = row.chars().collect();
    let first = chars.iter().position(|&c| c == '|').unwrap();
    let last = chars.iter().rposition(|&c| c == '|').unwrap();
    (last - first - 1) as u64
}

fn check_text(table: &ScheduleTable) -> Result<(), TestCaseError> {
    let text = render_text(table, &RenderOptions::default());
    let rows: Vec<&str> = text.lines().collect();
    prop_assert!(rows[0].starts_with("STU"));
    for lane in &table.lanes {
        let row = rows
            .iter()
            .find(|r| r.split('|').next().map(str::trim_end) == Some(lane.name.as_str()))
            .ok_or_else(|| TestCaseError::fail(format!("no row for {}", lane.name)))?;
        prop_assert_eq!(cells(row), table.hyperperiod_stu);
    }
    for e in &table.entries {
        let listed = format!("[{}, {})", e.start_stu, e.end_stu());
        prop_assert!(
            rows.iter().any(|r| r.trim_start().starts_with(&format!("{} ", e.id)) && r.contains(&listed)),
            "entry {} missing from listing",
            e.id
        );
    }
    Ok(())
}

#[test]
fn example_charts() {
    for stem in ["mono", "multiproc"] {
        let ex = example(stem);
        check_svg(&ex.table, 8.0).unwrap();
        check_svg(&ex.table, 2.5).unwrap();
        check_text(&ex.table).unwrap();
    }
}

#[test]
fn mono_text_shows_wait_and_reserve() {
    let t = render_text(&example("mono").table, &RenderOptions::default());
    let rows: Vec<&str> = t.lines().collect();
    assert!(rows[1].starts_with("node3 |"));
    assert_eq!(rows[1].matches('·').count(), 63);
    assert!(rows[2].starts_with("node3'|"));
    assert_eq!(rows[2].matches('?').count(), 16);
}

#[test]
fn coarser_cells_shrink_rows() {
    let table = example("multiproc").table;
    let per = 4;
    let t = render_text(
        &table,
        &RenderOptions {
            stu_per_cell: per,
            ..RenderOptions::default()
        },
    );
    let row = t.lines().find(|r| r.starts_with("node0")).unwrap();
    assert_eq!(cells(row), table.hyperperiod_stu.div_ceil(per));
}

#[test]
fn svg_scales_with_px_per_stu() {
    let table = example("multiproc").table;
    let widths = |px| {
        let svg = render_svg(&table, &opts(px, false));
        let doc = Document::parse(&svg).unwrap();
        doc.root_element()
            .descendants()
            .filter(|n| n.has_tag_name("rect") && class_of(n) != "band")
            .map(|n| (f(&n, "x") - LABEL_W, f(&n, "width")))
            .collect::<Vec<_>>()
    };
    for ((x1, w1), (x3, w3)) in widths(4.0).into_iter().zip(widths(12.0)) {
        assert!((x3 - 3.0 * x1).abs() < 1e-6 && (w3 - 3.0 * w1).abs() < 1e-6);
    }
}

#[test]
fn transfers_split_the_band() {
    let table = example("multiproc").table;
    let svg = render_svg(&table, &opts(8.0, false));
    let doc = Document::parse(&svg).unwrap();
    let heights = |class: &str| {
        doc.root_element()
            .descendants()
            .filter(|n| class_of(n) == class)
            .map(|n| f(&n, "height"))
            .collect::<Vec<_>>()
    };
    let compute = heights(EntryKind::Compute.name());
    let send = heights(EntryKind::Send.name());
    assert!(!send.is_empty());
    assert!(send.iter().all(|h| (2.0 * h - compute[0]).abs() < 1e-6));
}

#[test]
fn empty_table_renders() {
    let table = ScheduleTable::default();
    let svg = render_svg(&table, &RenderOptions::default());
    Document::parse(&svg).unwrap();
    assert_eq!(render_text(&table, &RenderOptions::default()).lines().count(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_schedules_render(inst in instance(8, 3, true), px in 0.5..20.0f64) {
        let raw = adequate(&inst.flat, &inst.arch).unwrap();
        let table = insert_waits(&raw, &inst.flat).unwrap_or(raw);
        check_svg(&table, px)?;
        check_text(&table)?;
    }
}
