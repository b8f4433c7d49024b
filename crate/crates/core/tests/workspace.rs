mod common;

use std::fs;

use common::*;
use mtsa::timeseries::TimeSeries;
use mtsa::workspace::{Config, ExportFormat, StatementStatus, Workspace, WorkspaceError};

fn tiny_workspace() -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::init(dir.path()).unwrap();
    ws.load_table(&tiny_calendar().to_csv(), "PayPeriod").unwrap();
    let demand = TimeSeries::from_values(DEMAND, TINY_DEMAND.iter().map(|&(t, v)| (t, v)));
    ws.load_table(&demand.to_csv(), DEMAND).unwrap();
    (dir, ws)
}

fn config() -> Config {
    Config::default()
}

#[test]
fn a_lone_table_declaration_learns_nothing() {
    let (dir, ws) = tiny_workspace();
    let report = ws.execute_script(include_str!("fixtures/corpus/1_demand_table.mtsa"), &config(), None).unwrap();
    assert_eq!(report.statements.len(), 1);
    assert_eq!(report.statements[0].status, StatementStatus::Ok);
    assert!(report.failed().is_none());
    assert!(ws.catalog().unwrap().table(DEMAND).is_some());
    assert_eq!(fs::read_dir(dir.path().join("params")).unwrap().count(), 0);
}

#[test]
fn gmu_script_learns_the_tiny_bounds() {
    let (dir, ws) = tiny_workspace();
    let report = ws.execute_script(GMU_SCRIPT, &config(), None).unwrap();
    assert!(report.failed().is_none(), "{report}");
    let exec = report.statements.iter().find(|s| s.kind == "EXECUTE").unwrap();
    assert!((exec.objective.unwrap() - 216.0984).abs() < 1e-6);
    let bound = fs::read_to_string(dir.path().join("params/PeakDemandBound.csv")).unwrap();
    assert!(bound.starts_with("time,period,value\n"));
    assert!(bound.contains("1,1,14\n") && bound.contains("4,2,12.6\n"), "{bound}");
}

#[test]
fn rerunning_writes_identical_parameters() {
    let (dir, ws) = tiny_workspace();
    let read = || {
        ["PeakDemandBound", "PayPeriodSupplyDemand", "KW"]
            .map(|n| fs::read(dir.path().join(format!("params/{n}.csv"))).unwrap())
    };
    ws.execute_script(GMU_SCRIPT, &config(), None).unwrap();
    let first = read();
    let report = ws.execute_script(GMU_SCRIPT, &config(), None).unwrap();
    assert!(report.failed().is_none());
    assert!(report.statements.iter().any(|s| s.message.as_deref() == Some("replaced an existing definition")));
    assert_eq!(read(), first);
}

#[test]
fn a_failing_statement_stops_the_run_and_keeps_earlier_ones() {
    let (_dir, ws) = tiny_workspace();
    let script = "CREATE TABLE A (time HOURLY_INTERVAL, value REAL);\n\
                  EXECUTE NoSuchEvent;\n\
                  CREATE TABLE B (time HOURLY_INTERVAL, value REAL);";
    let report = ws.execute_script(script, &config(), None).unwrap();
    assert_eq!(report.statements.len(), 2);
    let failed = report.failed().unwrap();
    assert_eq!(failed.index, 2);
    assert!(failed.message.as_deref().unwrap().contains("NoSuchEvent"));
    let catalog = ws.catalog().unwrap();
    assert!(catalog.table("A").is_some());
    assert!(catalog.table("B").is_none());
}

#[test]
fn unparsable_scripts_change_nothing() {
    let (_dir, ws) = tiny_workspace();
    let before = ws.catalog().unwrap();
    let script = "CREATE TABLE A (time HOURLY_INTERVAL, value REAL);\nCREATE VIEW;";
    assert!(matches!(ws.execute_script(script, &config(), None), Err(WorkspaceError::Dialect(_))));
    assert_eq!(ws.catalog().unwrap(), before);
}

#[test]
fn unknown_events_are_reported() {
    let (_dir, ws) = tiny_workspace();
    let err = ws.learn(&ws.catalog().unwrap(), "Nope", &config()).unwrap_err();
    assert!(matches!(err, WorkspaceError::UnknownEvent(ref e) if e == "Nope"));
}

#[test]
fn exports_both_model_formats() {
    let (_dir, ws) = tiny_workspace();
    ws.execute_script(GMU_SCRIPT, &config(), None).unwrap();
    let opl = ws.export_model(EVENT, ExportFormat::Opl).unwrap();
    assert_eq!(opl.len(), 2);
    assert!(fs::read_to_string(&opl[0]).unwrap().contains("minimize totalCharge;"));
    let lp = ws.export_model(EVENT, ExportFormat::Milp).unwrap();
    let text = fs::read_to_string(&lp[0]).unwrap();
    let binaries = text.split("Binaries\n").nth(1).unwrap().lines().take_while(|l| *l != "End").count();
    assert_eq!(binaries, 4);
}

#[test]
fn monitoring_replays_against_learned_bounds() {
    let (dir, ws) = tiny_workspace();
    let stream = "time,value\n1,13\n2,15\n3,12\n4,13\n";
    let report = ws.execute_script(GMU_SCRIPT, &config(), Some(stream)).unwrap();
    assert!(report.failed().is_none(), "{report}");
    let monitor = report.statements.last().unwrap();
    assert_eq!(monitor.kind, "MONITOR");
    assert_eq!(monitor.message.as_deref(), Some("2 of 4 records raised the indicator"));
    let log = fs::read_to_string(dir.path().join(format!("logs/{MONITOR_VIEW}.jsonl"))).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].contains("\"indicator\":1") && lines[1].contains(ACTION));
    assert!(!lines[0].contains("action"));

    let rule = ws.monitoring_rule(&ws.catalog().unwrap(), MONITOR_VIEW).unwrap();
    let mut out = Vec::new();
    let fired = ws.follow(&rule, "2,15\n4,10\n".as_bytes(), &mut out).unwrap();
    assert_eq!(fired, 1);
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    assert!(ws.replay_stream(&rule, "time,value\n2,1\n1,1\n").is_err());
}
