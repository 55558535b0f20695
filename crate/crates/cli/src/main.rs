use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use adequa::adequation::{adequate, insert_waits, verify_schedule, ScheduleTable};
use adequa::codegen::{expand, merge_programs, sequentialize_comm, emit_macros, MacroProgram, TargetDefinition};
use adequa::exec::{period_report, simulate_executive, DurationModel, ExecMode, ExecTimeline};
use adequa::hybrid::{check_synchronism, parse_diagram, simulate};
use adequa::parse::{parse_algorithm, parse_architecture, print_algorithm};
use adequa::render::{render_svg, render_text, RenderOptions};
use adequa::{flatten, validate_algorithm, validate_architecture, AlgorithmGraph, ArchitectureGraph, ValidationReport};

#[derive(Parser)]
#[command(name = "adequa", version, about = "Adequation, scheduling, code generation and simulation toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an algorithm (.adm), architecture (.arm) or diagram (.diag) file.
    Validate { model: PathBuf },
    /// Print the flattened algorithm in canonical form.
    Flatten {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distribute and schedule an algorithm onto an architecture.
    Adequate {
        #[arg(long)]
        algo: PathBuf,
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a schedule as a text or SVG Gantt chart.
    Render {
        schedule: PathBuf,
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value_t = 1)]
        stu_per_cell: u64,
        #[arg(long, default_value_t = 8.0)]
        px_per_stu: f64,
        #[arg(long)]
        synchros: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit one macro program per operator.
    Codegen {
        /// One or more schedules; several require --merge.
        #[arg(required = true)]
        schedules: Vec<PathBuf>,
        /// Algorithm of each schedule, or a single one shared by all.
        #[arg(long, required = true)]
        algo: Vec<PathBuf>,
        #[arg(long)]
        sequentialize: bool,
        #[arg(long)]
        merge: bool,
        /// Directory receiving `<operator>.m4k`; stdout when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Expand a macro program with a target definition.
    Expand {
        program: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a block diagram and print the probe trace.
    Simulate {
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a schedule with sampled execution times.
    Execsim {
        schedule: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        reps: u32,
        /// Best case as a fraction of the WCET.
        #[arg(long, default_value_t = 0.5)]
        best_fraction: f64,
        /// Sampling ticks per STU.
        #[arg(long, default_value_t = 1000)]
        resolution: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-block inter-activation statistics of an exported timeline.
    Report {
        timeline: PathBuf,
        #[arg(long)]
        algo: PathBuf,
        #[arg(long, default_value_t = 1000)]
        resolution: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    EventDriven,
    TimerBlocking,
}

enum Failure {
    /// Bad invocation or unreadable input; exit status 2.
    Usage(String),
    /// The inputs were read but did not check out; exit status 1.
    Findings(String),
}

type Run = Result<(), Failure>;

fn findings(e: impl std::fmt::Display) -> Failure {
    Failure::Findings(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Run {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check(report: ValidationReport) -> Run {
    if report.is_empty() {
        Ok(())
    } else {
        Err(Failure::Findings(report.to_string()))
    }
}

fn load_algorithm(path: &Path) -> Result<AlgorithmGraph, Failure> {
    let parsed = parse_algorithm(&read(path)?).map_err(|e| findings(format!("{}:{e}", path.display())))?;
    let mut report = parsed.findings;
    report.extend(validate_algorithm(&parsed.model));
    check(report)?;
    Ok(parsed.model)
}

fn load_architecture(path: &Path) -> Result<ArchitectureGraph, Failure> {
    let parsed = parse_architecture(&read(path)?).map_err(|e| findings(format!("{}:{e}", path.display())))?;
    let mut report = parsed.findings;
    report.extend(validate_architecture(&parsed.model));
    check(report)?;
    Ok(parsed.model)
}

fn load_schedule(path: &Path) -> Result<ScheduleTable, Failure> {
    ScheduleTable::from_json(&read(path)?).map_err(|e| findings(format!("{}: {e}", path.display())))
}

fn validate(model: &Path) -> Run {
    match model.extension().and_then(|e| e.to_str()) {
        Some("adm") => load_algorithm(model).map(drop),
        Some("arm") => load_architecture(model).map(drop),
        Some("diag") => {
            let d = parse_diagram(&read(model)?).map_err(|e| findings(format!("{}:{e}", model.display())))?;
            let mut report = d.validate();
            if report.is_empty() {
                report.extend(check_synchronism(&d));
            }
            check(report)
        }
        _ => Err(Failure::Usage(format!(
            "{}: expected a .adm, .arm or .diag file",
            model.display()
        ))),
    }?;
    println!("ok");
    Ok(())
}

fn codegen(schedules: &[PathBuf], algos: &[PathBuf], sequentialize: bool, merge: bool, out_dir: Option<&Path>) -> Run {
    if algos.len() != 1 && algos.len() != schedules.len() {
        return Err(Failure::Usage("give one --algo per schedule or a single shared one".into()));
    }
    if schedules.len() > 1 && !merge {
        return Err(Failure::Usage("several schedules need --merge".into()));
    }
    let mut runs: Vec<Vec<MacroProgram>> = Vec::new();
    for (i, s) in schedules.iter().enumerate() {
        let flat = flatten(&load_algorithm(&algos[i.min(algos.len() - 1)])?).map_err(findings)?;
        let mut progs = emit_macros(&load_schedule(s)?, &flat);
        if sequentialize {
            progs = sequentialize_comm(&progs).map_err(findings)?;
        }
        runs.push(progs);
    }
    let progs = if merge {
        let mut operators: Vec<String> = Vec::new();
        for p in runs.iter().flatten() {
            if !operators.contains(&p.operator) {
                operators.push(p.operator.clone());
            }
        }
        operators
            .iter()
            .map(|op| {
                let parts: Vec<MacroProgram> = runs.iter().flatten().filter(|p| &p.operator == op).cloned().collect();
                merge_programs(&parts).map_err(findings)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        runs.remove(0)
    };
    match out_dir {
        Some(dir) => {
            for p in &progs {
                write_out(Some(&dir.join(format!("{}.m4k", p.operator))), &p.to_m4k())?;
            }
            Ok(())
        }
        None => write_out(None, &progs.iter().map(MacroProgram::to_m4k).collect::<Vec<_>>().join("\n")),
    }
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Validate { model } => validate(&model),
        Command::Flatten { model, out } => {
            let flat = flatten(&load_algorithm(&model)?).map_err(findings)?;
            write_out(out.as_deref(), &print_algorithm(&flat))
        }
        Command::Adequate { algo, arch, out } => {
            let flat = flatten(&load_algorithm(&algo)?).map_err(findings)?;
            let arch = load_architecture(&arch)?;
            let table = adequate(&flat, &arch).map_err(findings)?;
            let table = insert_waits(&table, &flat).map_err(findings)?;
            check(verify_schedule(&table, &flat, &arch))?;
            write_out(out.as_deref(), &table.to_json())
        }
        Command::Render {
            schedule,
            svg,
            stu_per_cell,
            px_per_stu,
            synchros,
            out,
        } => {
            let table = load_schedule(&schedule)?;
            let opts = RenderOptions {
                stu_per_cell,
                px_per_stu,
                show_synchros: synchros,
            };
            let text = if svg { render_svg(&table, &opts) } else { render_text(&table, &opts) };
            write_out(out.as_deref(), &text)
        }
        Command::Codegen {
            schedules,
            algo,
            sequentialize,
            merge,
            out_dir,
        } => codegen(&schedules, &algo, sequentialize, merge, out_dir.as_deref()),
        Command::Expand { program, target, out } => {
            let prog = MacroProgram::from_m4k(&read(&program)?).map_err(findings)?;
            let target = TargetDefinition::parse(&read(&target)?).map_err(findings)?;
            write_out(out.as_deref(), &expand(&prog, &target).map_err(findings)?)
        }
        Command::Simulate { diagram, t_end, dt, out } => {
            let d = parse_diagram(&read(&diagram)?).map_err(|e| findings(format!("{}:{e}", diagram.display())))?;
            let trace = simulate(&d, t_end, dt).map_err(findings)?;
            write_out(out.as_deref(), &trace.to_csv())
        }
        Command::Execsim {
            schedule,
            mode,
            seed,
            reps,
            best_fraction,
            resolution,
            out,
        } => {
            if !(best_fraction > 0.0 && best_fraction <= 1.0) {
                return Err(Failure::Usage("--best-fraction must lie in (0, 1]".into()));
            }
            let table = load_schedule(&schedule)?;
            let dm = DurationModel::from_table(&table, resolution, best_fraction).with_seed(seed);
            let mode = match mode {
                Mode::EventDriven => ExecMode::EventDriven,
                Mode::TimerBlocking => ExecMode::TimerBlocking,
            };
            let tl = simulate_executive(&table, &dm, mode, reps).map_err(findings)?;
            write_out(out.as_deref(), &tl.to_csv())
        }
        Command::Report {
            timeline,
            algo,
            resolution,
        } => {
            let flat = flatten(&load_algorithm(&algo)?).map_err(findings)?;
            let tl = ExecTimeline::from_csv(&read(&timeline)?, ExecMode::EventDriven, resolution).map_err(findings)?;
            let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
            let mut text = String::from("block,period,activations,min,max,mean,violations\n");
            for s in period_report(&tl, &flat) {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    s.block,
                    s.period_stu,
                    s.activations,
                    fmt(s.min),
                    fmt(s.max),
                    fmt(s.mean),
                    s.violations
                ));
            }
            write_out(None, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings(msg)) => {
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
