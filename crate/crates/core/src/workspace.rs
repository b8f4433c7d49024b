//! A directory holding the catalog, loaded data, learned parameters and
//! logs, and the script runner that drives the learning pipeline over it.
//!
//! ```text
//! mtsa.toml       settings
//! catalog.json    declared tables, views and events
//! data/           calendar.csv and one `time,value` file per series
//! params/         learned or supplied `time,period,value` / `time,value` tables
//! exports/        OPL and LP model files
//! logs/           recommendation logs
//! ```

use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{
    compile_event, emit_milp, emit_opl, ground, Catalog, CompileError, DataStore, EmitError, GroundConfig,
    GroundError, GroundInstance,
};
use crate::dialect::{parse_script, DialectError, Statement};
use crate::monitor::{compile_monitor, monitor_shape, parse_stream_line, replay, Follower, MonitorError, MonitoringRule};
use crate::solver::{
    check_solution, local_search, solve_breakpoints, solve_zero_budget, zero_shed_solution, SolveError, Solution,
    SolverConfig, Status, Violation,
};
use crate::timeseries::{
    load_calendar, load_series, validate_calendar, CalendarTable, DecisionParameterTable, SeriesError, TimeSeries,
    CALENDAR_HEADER, PERIOD_PARAMETER_HEADER, SERIES_HEADER,
};

const CONFIG_FILE: &str = "mtsa.toml";
const CATALOG_FILE: &str = "catalog.json";
const LOCK_FILE: &str = ".mtsa.lock";
const CALENDAR_FILE: &str = "calendar.csv";
const DIRS: [&str; 4] = ["data", "params", "exports", "logs"];

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} is not a workspace (run `mtsa init` first)")]
    NotAWorkspace(PathBuf),
    #[error("workspace is locked by another process (remove {0} if that process is gone)")]
    Locked(PathBuf),
    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{file}: {source}")]
    Data { file: String, source: SeriesError },
    #[error("{0}")]
    InvalidCalendar(String),
    #[error("no calendar loaded (load a `{CALENDAR_HEADER}` file)")]
    NoCalendar,
    #[error("unrecognized header `{0}`; expected `{CALENDAR_HEADER}`, `{SERIES_HEADER}` or `{PERIOD_PARAMETER_HEADER}`")]
    UnknownHeader(String),
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error("no learned or loaded parameter table {0}")]
    MissingParameterTable(String),
    #[error(transparent)]
    Dialect(#[from] DialectError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("grounding failed: {0}")]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("solution failed verification: {0} violated constraints, first {1}")]
    CheckFailed(usize, String),
}

type Result<T, E = WorkspaceError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ZeroBudget,
    #[default]
    Breakpoints,
    LocalSearch,
}

/// `mtsa.toml`. Keys are camelCase; every key is optional.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Config {
    #[serde(flatten)]
    pub ground: GroundConfig,
    pub solver: SolverKind,
    #[serde(flatten)]
    pub search: SolverConfig,
    /// Reserved for randomized components; the pipeline has none and
    /// ignores it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Config {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum LoadedKind {
    Calendar,
    Series,
    Parameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Opl,
    Milp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum StatementStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatementReport {
    /// 1-based position in the script.
    pub index: usize,
    pub kind: String,
    pub name: String,
    pub status: StatementStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_status: Option<Status>,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub statements: Vec<StatementReport>,
}

impl RunReport {
    pub fn failed(&self) -> Option<&StatementReport> {
        self.statements.iter().find(|s| s.status == StatementStatus::Failed)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            let status = match s.status {
                StatementStatus::Ok => "ok",
                StatementStatus::Failed => "FAILED",
            };
            write!(f, "[{}] {} {}: {status} ({:.1} ms)", s.index, s.kind, s.name, s.elapsed_ms)?;
            if let Some(obj) = s.objective {
                write!(f, ", objective {obj:.4}")?;
            }
            if let Some(st) = s.solve_status {
                write!(f, " [{st:?}]")?;
            }
            writeln!(f)?;
            if let Some(m) = &s.message {
                writeln!(f, "    {m}")?;
            }
            for o in &s.outputs {
                writeln!(f, "    wrote {}", o.display())?;
            }
        }
        Ok(())
    }
}

/// Result of running one learning event.
#[derive(Debug, Clone)]
pub struct Learned {
    pub ground: GroundInstance<f64>,
    pub solution: Solution<f64>,
    pub outputs: Vec<PathBuf>,
}

/// Held while a command mutates the workspace.
#[derive(Debug)]
pub struct Lock {
    path: PathBuf,
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn first_line(text: &str) -> &str {
    text.lines().next().unwrap_or("").trim().trim_start_matches('\u{feff}')
}

impl Workspace {
    /// Creates the layout under `root`, keeping any existing files.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for d in DIRS {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let ws = Self { root };
        if !ws.root.join(CONFIG_FILE).exists() {
            write_atomic(&ws.root.join(CONFIG_FILE), Config::default().to_toml().as_bytes())?;
        }
        if !ws.root.join(CATALOG_FILE).exists() {
            ws.save_catalog(&Catalog::default())?;
        }
        Ok(ws)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.join(CATALOG_FILE).is_file() {
            return Err(WorkspaceError::NotAWorkspace(root));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn lock(&self) -> Result<Lock> {
        let path = self.root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(WorkspaceError::Locked(path)),
            Err(e) => Err(WorkspaceError::Io { path, source: e }),
        }
    }

    pub fn config(&self) -> Result<Config> {
        let path = self.root.join(CONFIG_FILE);
        if !path.exists() {
            return Ok(Config::default());
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let cfg: Config = toml::from_str(&text).map_err(|e| WorkspaceError::Config { path: path.clone(), msg: e.to_string() })?;
        cfg.search.validate().map_err(|e| WorkspaceError::Config { path, msg: e.to_string() })?;
        Ok(cfg)
    }

    pub fn catalog(&self) -> Result<Catalog> {
        let path = self.root.join(CATALOG_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| WorkspaceError::Config { path, msg: e.to_string() })
    }

    pub fn save_catalog(&self, c: &Catalog) -> Result<()> {
        let text = serde_json::to_string_pretty(c).expect("catalog serializes");
        write_atomic(&self.root.join(CATALOG_FILE), text.as_bytes())
    }

    fn find(&self, dir: &str, name: &str) -> Option<PathBuf> {
        let want = format!("{name}.csv");
        let entries = fs::read_dir(self.root.join(dir)).ok()?;
        entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .find(|p| p.file_name().and_then(|f| f.to_str()).is_some_and(|f| f.eq_ignore_ascii_case(&want)))
    }

    /// Validates a CSV by its header and stores it. Calendars go to
    /// `data/calendar.csv` whatever `name` is; series to `data/<name>.csv`;
    /// `time,period,value` tables to `params/<name>.csv`.
    pub fn load_table(&self, csv_text: &str, name: &str) -> Result<(LoadedKind, PathBuf)> {
        let data_err = |source| WorkspaceError::Data { file: name.to_string(), source };
        let header = first_line(csv_text);
        let (kind, dir, file) = if header.eq_ignore_ascii_case(CALENDAR_HEADER) {
            let cal = load_calendar(csv_text).map_err(data_err)?;
            let report = validate_calendar(&cal);
            if !report.is_valid() {
                let first = report.violations.iter().take(5).map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
                return Err(WorkspaceError::InvalidCalendar(format!(
                    "{name}: {} calendar violations: {first}",
                    report.violations.len()
                )));
            }
            (LoadedKind::Calendar, "data", CALENDAR_FILE.to_string())
        } else if header.eq_ignore_ascii_case(SERIES_HEADER) {
            load_series::<f64>(csv_text, name).map_err(data_err)?;
            (LoadedKind::Series, "data", format!("{name}.csv"))
        } else if header.eq_ignore_ascii_case(PERIOD_PARAMETER_HEADER) {
            DecisionParameterTable::<f64>::load_per_period(csv_text, name).map_err(data_err)?;
            (LoadedKind::Parameter, "params", format!("{name}.csv"))
        } else {
            return Err(WorkspaceError::UnknownHeader(header.to_string()));
        };
        let stem = file.trim_end_matches(".csv");
        if let Some(old) = self.find(dir, stem) {
            fs::remove_file(&old).map_err(io_err(&old))?;
        }
        let path = self.root.join(dir).join(file);
        write_atomic(&path, csv_text.as_bytes())?;
        Ok((kind, path))
    }

    pub fn calendar(&self) -> Result<CalendarTable> {
        let path = self.root.join("data").join(CALENDAR_FILE);
        if !path.exists() {
            return Err(WorkspaceError::NoCalendar);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        load_calendar(&text).map_err(|source| WorkspaceError::Data { file: CALENDAR_FILE.into(), source })
    }

    pub fn series(&self, name: &str) -> Result<Option<TimeSeries<f64>>> {
        let Some(path) = self.find("data", name) else { return Ok(None) };
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        load_series(&text, name).map(Some).map_err(|source| WorkspaceError::Data { file: name.into(), source })
    }

    pub fn parameter(&self, name: &str) -> Result<DecisionParameterTable<f64>> {
        let path = self.find("params", name).ok_or_else(|| WorkspaceError::MissingParameterTable(name.into()))?;
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        DecisionParameterTable::load_per_period(&text, name)
            .map_err(|source| WorkspaceError::Data { file: name.into(), source })
    }

    /// Calendar plus whichever of `names` have been loaded.
    pub fn data_store<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Result<DataStore<f64>> {
        let mut store = DataStore::new(self.calendar()?);
        for n in names {
            if let Some(s) = self.series(n)? {
                store = store.with_series(s);
            }
        }
        Ok(store)
    }

    fn ground_event(&self, catalog: &Catalog, event: &str, cfg: &Config) -> Result<GroundInstance<f64>> {
        if catalog.event(event).is_none() {
            return Err(WorkspaceError::UnknownEvent(event.into()));
        }
        let instance = compile_event(catalog, event)?;
        let store = self.data_store(&instance.series)?;
        Ok(ground(&instance, &store, &cfg.ground)?)
    }

    /// Compiles, grounds, solves and verifies `event`, then writes the
    /// three learned tables and the solution to `params/`.
    pub fn learn(&self, catalog: &Catalog, event: &str, cfg: &Config) -> Result<Learned> {
        let g = self.ground_event(catalog, event, cfg)?;
        let solution = match cfg.solver {
            SolverKind::ZeroBudget => solve_zero_budget(&g)?,
            SolverKind::Breakpoints => solve_breakpoints(&g, &cfg.search)?,
            SolverKind::LocalSearch => local_search(&g, &zero_shed_solution(&g), &cfg.search)?,
        };
        let report = check_solution(&g, &solution, cfg.search.tolerance);
        if let Some(v) = report.violations.first() {
            return Err(WorkspaceError::CheckFailed(report.violations.len(), describe(v)));
        }
        let mut outputs = Vec::new();
        for table in solution.parameter_tables(&g) {
            if let Some(old) = self.find("params", &table.name) {
                fs::remove_file(&old).map_err(io_err(&old))?;
            }
            let path = self.root.join("params").join(format!("{}.csv", table.name));
            write_atomic(&path, table.to_csv(&g.calendar).as_bytes())?;
            outputs.push(path);
        }
        let path = self.root.join("params").join(format!("{event}.solution.json"));
        let json = serde_json::to_string_pretty(&solution).expect("solution serializes");
        write_atomic(&path, json.as_bytes())?;
        outputs.push(path);
        Ok(Learned { ground: g, solution, outputs })
    }

    pub fn monitoring_rule(&self, catalog: &Catalog, view: &str) -> Result<MonitoringRule<f64>> {
        let shape = monitor_shape(catalog, view)?;
        let params = self.parameter(&shape.parameter)?;
        Ok(compile_monitor(catalog, view, &params, &self.calendar()?)?)
    }

    fn log_path(&self, view: &str) -> PathBuf {
        self.root.join("logs").join(format!("{view}.jsonl"))
    }

    /// Replays a CSV stream, writing `logs/<view>.jsonl`. Returns the number
    /// of records and of raised indicators.
    pub fn replay_stream(&self, rule: &MonitoringRule<f64>, csv_text: &str) -> Result<(usize, usize, PathBuf)> {
        let stream = crate::monitor::parse_stream(csv_text)?;
        let mut buf = Vec::new();
        let recs = replay(rule, &stream, &mut buf)?;
        let path = self.log_path(&rule.view);
        write_atomic(&path, &buf)?;
        Ok((recs.len(), recs.iter().filter(|r| r.indicator == 1).count(), path))
    }

    /// Follow mode: reads `time,value` lines until end of input, appending
    /// each recommendation to the view's log and echoing it to `out`.
    pub fn follow(&self, rule: &MonitoringRule<f64>, input: impl BufRead, mut out: impl Write) -> Result<usize> {
        let path = self.log_path(&rule.view);
        let mut log = fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        let mut follower = Follower::new(rule);
        let mut fired = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(io_err(Path::new("<stdin>")))?;
            let Some(rec) = parse_stream_line(&line, i + 1)? else { continue };
            let r = follower.push(&rec)?;
            fired += r.indicator as usize;
            let json = serde_json::to_string(&r).expect("recommendation serializes");
            writeln!(log, "{json}").map_err(io_err(&path))?;
            writeln!(out, "{json}").map_err(io_err(Path::new("<stdout>")))?;
            out.flush().map_err(io_err(Path::new("<stdout>")))?;
        }
        Ok(fired)
    }

    /// Writes `exports/<event>.mod` and `.dat`, or `exports/<event>.lp`.
    pub fn export_model(&self, event: &str, format: ExportFormat) -> Result<Vec<PathBuf>> {
        let catalog = self.catalog()?;
        let g = self.ground_event(&catalog, event, &self.config()?)?;
        let dir = self.root.join("exports");
        match format {
            ExportFormat::Opl => {
                let m = emit_opl(&g);
                let (model, data) = (dir.join(format!("{event}.mod")), dir.join(format!("{event}.dat")));
                write_atomic(&model, m.model.as_bytes())?;
                write_atomic(&data, m.data.as_bytes())?;
                Ok(vec![model, data])
            }
            ExportFormat::Milp => {
                let text = emit_milp(&g, g.max_demand())?;
                let path = dir.join(format!("{event}.lp"));
                write_atomic(&path, text.as_bytes())?;
                Ok(vec![path])
            }
        }
    }

    /// Runs statements in order, committing the catalog after each one and
    /// stopping at the first failure. `stream`, when given, is replayed by
    /// every MONITOR statement.
    pub fn execute_script(&self, script: &str, cfg: &Config, stream: Option<&str>) -> Result<RunReport> {
        let stmts = parse_script(script)?;
        let mut catalog = self.catalog()?;
        let mut report = RunReport::default();
        for (i, stmt) in stmts.iter().enumerate() {
            let started = Instant::now();
            let mut entry = StatementReport {
                index: i + 1,
                kind: stmt.kind().to_string(),
                name: stmt.name().to_string(),
                status: StatementStatus::Ok,
                message: None,
                objective: None,
                solve_status: None,
                elapsed_ms: 0.0,
                outputs: Vec::new(),
            };
            let outcome = self.apply(&mut catalog, stmt, cfg, stream, &mut entry);
            entry.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
            let failed = outcome.is_err();
            if let Err(e) = outcome {
                entry.status = StatementStatus::Failed;
                entry.message = Some(e.to_string());
            }
            report.statements.push(entry);
            if failed {
                break;
            }
        }
        Ok(report)
    }

    fn apply(
        &self,
        catalog: &mut Catalog,
        stmt: &Statement,
        cfg: &Config,
        stream: Option<&str>,
        entry: &mut StatementReport,
    ) -> Result<()> {
        match stmt {
            Statement::CreateTable(_) | Statement::CreateView(_) | Statement::CreateEvent(_) => {
                let name = stmt.name().as_str();
                let replaced = match stmt {
                    Statement::CreateEvent(_) => catalog.event(name).is_some(),
                    _ => catalog.table(name).is_some() || catalog.view(name).is_some(),
                };
                if replaced {
                    entry.message = Some("replaced an existing definition".into());
                }
                let mut next = catalog.clone();
                next.define(stmt);
                self.save_catalog(&next)?;
                *catalog = next;
            }
            Statement::Execute { event } => {
                let learned = self.learn(catalog, event.as_str(), cfg)?;
                entry.objective = Some(learned.solution.objective);
                entry.solve_status = Some(learned.solution.status);
                entry.outputs = learned.outputs;
            }
            Statement::Monitor { view } => {
                let rule = self.monitoring_rule(catalog, view.as_str())?;
                match stream {
                    Some(text) => {
                        let (n, fired, path) = self.replay_stream(&rule, text)?;
                        entry.message = Some(format!("{fired} of {n} records raised the indicator"));
                        entry.outputs.push(path);
                    }
                    None => {
                        entry.message = Some(format!(
                            "rule ready: {} {} {}; replay a stream with `mtsa monitor {}`",
                            rule.series,
                            rule.op.symbol(),
                            rule.parameter,
                            rule.view
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

fn describe(v: &Violation) -> String {
    let mut s = v.constraint.clone();
    if let Some(t) = v.time {
        s.push_str(&format!(" at t={t}"));
    }
    if let Some(p) = v.period {
        s.push_str(&format!(" in period {p}"));
    }
    s.push_str(&format!(" (slack {})", v.slack));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_keys() {
        let c: Config = toml::from_str("annualBound = 5.0\nsolver = \"local_search\"\ngridStep = 0.5\n").unwrap();
        assert_eq!(c.ground.annual_bound, 5.0);
        assert_eq!(c.ground.horizon_years, 1.0);
        assert_eq!(c.solver, SolverKind::LocalSearch);
        assert_eq!(c.search.grid_step, 0.5);
        assert_eq!(c.search.tolerance, 1e-6);
        let back: Config = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<Config>("solver = \"simplex\"").is_err());
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path()).unwrap();
        let l = ws.lock().unwrap();
        assert!(matches!(ws.lock(), Err(WorkspaceError::Locked(_))));
        drop(l);
        ws.lock().unwrap();
    }

    #[test]
    fn open_requires_init() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Workspace::open(dir.path()), Err(WorkspaceError::NotAWorkspace(_))));
        Workspace::init(dir.path()).unwrap();
        Workspace::open(dir.path()).unwrap();
    }

    #[test]
    fn load_dispatches_on_header() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::init(dir.path()).unwrap();
        let (k, _) = ws.load_table("time,value\n1,2\n", "Demand").unwrap();
        assert_eq!(k, LoadedKind::Series);
        assert!(ws.series("demand").unwrap().is_some());
        assert!(matches!(ws.load_table("a,b\n", "X"), Err(WorkspaceError::UnknownHeader(_))));
        assert!(matches!(ws.load_table("time,value\n1,2\n1,3\n", "X"), Err(WorkspaceError::Data { .. })));
    }
}
