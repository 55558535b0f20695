use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn adequa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adequa"))
        .args(args)
        .current_dir(models())
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = adequa(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    adequa(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs the whole pipeline into a scratch directory and compares every file
/// with the checked-in golden copy.
fn golden_pipeline(stem: &str) {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path();
    let (algo, arch) = (format!("{stem}.adm"), format!("{stem}.arm"));
    let schedule = g.join("schedule.json");
    ok(&["adequate", "--algo", &algo, "--arch", &arch, "--out", s(&schedule)]);
    ok(&["render", s(&schedule), "--out", s(&g.join("gantt.txt"))]);
    ok(&["render", "--svg", s(&schedule), "--out", s(&g.join("gantt.svg"))]);
    ok(&["codegen", s(&schedule), "--algo", &algo, "--out-dir", s(g)]);
    let programs: Vec<PathBuf> = fs::read_dir(g)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "m4k"))
        .collect();
    assert!(!programs.is_empty());
    for p in &programs {
        ok(&["expand", s(p), "--target", "atmega128.tdef", "--out", s(&p.with_extension("c"))]);
    }

    let golden = models().join("golden").join(stem);
    let mut expected: Vec<_> = fs::read_dir(&golden).unwrap().map(|e| e.unwrap().file_name()).collect();
    let mut produced: Vec<_> = fs::read_dir(g).unwrap().map(|e| e.unwrap().file_name()).collect();
    expected.sort();
    produced.sort();
    assert_eq!(produced, expected, "{stem}: file sets differ");
    for name in expected {
        let want = fs::read(golden.join(&name)).unwrap();
        let got = fs::read(g.join(&name)).unwrap();
        assert!(got == want, "{stem}/{} differs from golden", name.to_string_lossy());
    }
}

#[test]
fn mono_matches_golden() {
    golden_pipeline("mono");
}

#[test]
fn multiproc_matches_golden() {
    golden_pipeline("multiproc");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["validate", "multiproc.arm"]), 0);
    assert_eq!(code(&["validate", "mono.adm"]), 0);
    assert_eq!(code(&["validate", "fan.diag"]), 0);
    assert_eq!(code(&["adequate", "--algo", "mono.adm"]), 2);
    assert_eq!(code(&["validate", "no_such_file.adm"]), 2);
    assert_eq!(code(&["validate", "atmega128.tdef"]), 2);
    assert_eq!(
        code(&["codegen", "golden/mono/schedule.json", "golden/multiproc/schedule.json", "--algo", "mono.adm"]),
        2
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.adm");
    fs::write(&bad, "def algorithm a :\n  x\n").unwrap();
    let out = adequa(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:3: UNEXPECTED_TOKEN"));

    let bad_json = dir.path().join("schedule.json");
    fs::write(&bad_json, "{").unwrap();
    assert_eq!(code(&["render", s(&bad_json)]), 1);
    assert_eq!(code(&["execsim", "golden/mono/schedule.json", "--mode", "event-driven", "--best-fraction", "0"]), 2);
}

#[test]
fn flatten_output_validates() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.adm");
    ok(&["flatten", "multiproc.adm", "--out", s(&flat)]);
    assert_eq!(ok(&["validate", s(&flat)]), "ok\n");
    assert_eq!(ok(&["flatten", s(&flat)]), fs::read_to_string(&flat).unwrap());
}

#[test]
fn sequentialized_codegen_expands() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "codegen",
        "--sequentialize",
        "golden/multiproc/schedule.json",
        "--algo",
        "multiproc.adm",
        "--out-dir",
        s(dir.path()),
    ]);
    for op in ["node0", "node1", "node2", "node3", "pc"] {
        let m4k = dir.path().join(format!("{op}.m4k"));
        let text = fs::read_to_string(&m4k).unwrap();
        assert!(text.starts_with(&format!("processor_({op})")));
        assert!(!text.contains("Pre") && !text.contains("Suc"), "{op} still has sequencer tokens");
        let c = ok(&["expand", s(&m4k), "--target", "atmega128.tdef"]);
        assert!(!c.contains('$'));
    }
}

#[test]
fn execsim_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let tl = dir.path().join("timeline.csv");
    let args = ["execsim", "golden/mono/schedule.json", "--mode", "event-driven", "--reps", "20", "--seed", "3"];
    ok(&[&args[..], &["--out", s(&tl)]].concat());
    let csv = fs::read_to_string(&tl).unwrap();
    assert!(csv.starts_with("repetition,lane,entry,block,kind,start,end\n"));
    assert_eq!(ok(&args), csv, "same seed, same timeline");

    let report = ok(&["report", s(&tl), "--algo", "mono.adm"]);
    let mut rows = report.lines();
    assert_eq!(rows.next(), Some("block,period,activations,min,max,mean,violations"));
    let rows: Vec<Vec<&str>> = rows.map(|r| r.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r[1], "80");
        assert_eq!(r[2], "20");
        assert!(r[6].parse::<u32>().unwrap() >= 1, "{} never drifts", r[0]);
    }

    let blocking = ok(&["execsim", "golden/mono/schedule.json", "--mode", "timer-blocking", "--reps", "20"]);
    fs::write(&tl, blocking).unwrap();
    let report = ok(&["report", s(&tl), "--algo", "mono.adm"]);
    assert!(report.lines().skip(1).all(|r| r.ends_with(",0")));
}

#[test]
fn simulate_writes_a_trace() {
    let csv = ok(&["simulate", "--diagram", "fan.diag", "--t-end", "0.05", "--dt", "0.001"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,duty,rpm"));
    assert_eq!(lines.count(), 51);
}
