use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mtsa::workspace::{Config, ExportFormat, RunReport, StatementReport, StatementStatus, Workspace};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mtsa", version, about = "Learn peak demand bounds from time series and monitor against them")]
struct Cli {
    /// Workspace directory.
    #[arg(short = 'C', long = "workspace", global = true, default_value = ".")]
    workspace: PathBuf,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized components (the default pipeline has none).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the workspace layout and a default mtsa.toml.
    Init,
    /// Validate a CSV file and store it under a table name.
    Load {
        csv: PathBuf,
        #[arg(long = "as", value_name = "TABLE")]
        table: String,
    },
    /// Execute a script of CREATE, EXECUTE and MONITOR statements.
    Run {
        script: PathBuf,
        /// `time,value` stream replayed by MONITOR statements.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Learn the parameters of a catalogued event.
    Solve { event: String },
    /// Write the model of an event for an external solver.
    Export {
        event: String,
        #[arg(long, value_enum, default_value_t = Format::Opl)]
        format: Format,
    },
    /// Apply a monitoring view to a stream file, or to standard input with `-`.
    Monitor {
        view: String,
        #[arg(long)]
        stream: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Opl,
    Milp,
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading standard input")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn config(ws: &Workspace, seed: Option<u64>) -> Result<Config> {
    let mut cfg = ws.config()?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_report(report: &RunReport, as_json: bool) {
    if as_json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    } else {
        print!("{report}");
    }
}

/// `Ok(false)` when the command ran but reported a diagnostic.
fn run(cli: Cli) -> Result<bool> {
    let root = cli.workspace.as_path();
    match cli.command {
        Command::Init => {
            let ws = Workspace::init(root)?;
            if cli.json {
                println!("{}", json!({ "workspace": ws.root() }));
            } else {
                println!("initialized workspace in {}", ws.root().display());
            }
        }
        Command::Load { csv, table } => {
            let ws = Workspace::open(root)?;
            let _lock = ws.lock()?;
            let text = read_input(&csv)?;
            let (kind, path) = ws.load_table(&text, &table)?;
            if cli.json {
                println!("{}", json!({ "table": table, "kind": kind, "path": path }));
            } else {
                println!("loaded {} as {table} ({kind:?}) -> {}", csv.display(), path.display());
            }
        }
        Command::Run { script, stream } => {
            let ws = Workspace::open(root)?;
            let _lock = ws.lock()?;
            let cfg = config(&ws, cli.seed)?;
            let text = read_input(&script)?;
            let stream = stream.map(|p| read_input(&p)).transpose()?;
            let report = ws.execute_script(&text, &cfg, stream.as_deref())?;
            print_report(&report, cli.json);
            if let Some(f) = report.failed() {
                eprintln!("error: statement {} ({} {}) failed", f.index, f.kind, f.name);
                return Ok(false);
            }
        }
        Command::Solve { event } => {
            let ws = Workspace::open(root)?;
            let _lock = ws.lock()?;
            let cfg = config(&ws, cli.seed)?;
            let started = std::time::Instant::now();
            let learned = ws.learn(&ws.catalog()?, &event, &cfg)?;
            let report = RunReport {
                statements: vec![StatementReport {
                    index: 1,
                    kind: "EXECUTE".into(),
                    name: event,
                    status: StatementStatus::Ok,
                    message: None,
                    objective: Some(learned.solution.objective),
                    solve_status: Some(learned.solution.status),
                    elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
                    outputs: learned.outputs,
                }],
            };
            print_report(&report, cli.json);
        }
        Command::Export { event, format } => {
            let ws = Workspace::open(root)?;
            let format = match format {
                Format::Opl => ExportFormat::Opl,
                Format::Milp => ExportFormat::Milp,
            };
            let paths = ws.export_model(&event, format)?;
            if cli.json {
                println!("{}", json!({ "event": event, "files": paths }));
            } else {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
        }
        Command::Monitor { view, stream } => {
            let ws = Workspace::open(root)?;
            let rule = ws.monitoring_rule(&ws.catalog()?, &view)?;
            if stream == Path::new("-") {
                let fired = ws.follow(&rule, io::stdin().lock(), io::stdout().lock())?;
                eprintln!("{fired} recommendations");
            } else {
                let (n, fired, log) = ws.replay_stream(&rule, &read_input(&stream)?)?;
                if cli.json {
                    println!("{}", json!({ "view": view, "records": n, "fired": fired, "log": log }));
                } else {
                    println!("{fired} of {n} records raised the indicator; log in {}", log.display());
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
