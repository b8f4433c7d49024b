use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const SCRIPT: &str = include_str!("../../../scripts/gmu.mtsa");
const CALENDAR: &str = "time,payPeriod,year,month,day,hour,weekDay\n\
    -2,0,2012,7,3,11,2\n-1,0,2012,7,3,11,2\n0,0,2012,7,3,11,2\n\
    1,1,2012,7,3,11,2\n2,1,2012,7,3,11,2\n3,2,2012,7,3,11,2\n4,2,2012,7,3,11,2\n";
const DEMAND: &str = "time,value\n-2,10\n-1,8\n0,12\n1,10\n2,14\n3,9\n4,11\n";

fn mtsa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtsa")).arg("-C").arg(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// An initialized workspace with the small fixture loaded.
fn loaded() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(mtsa(p, &["init"]).status.success());
    fs::write(p.join("cal.csv"), CALENDAR).unwrap();
    fs::write(p.join("demand.csv"), DEMAND).unwrap();
    fs::write(p.join("gmu.mtsa"), SCRIPT).unwrap();
    let cal = p.join("cal.csv");
    let demand = p.join("demand.csv");
    assert!(mtsa(p, &["load", cal.to_str().unwrap(), "--as", "PayPeriod"]).status.success());
    assert!(mtsa(p, &["load", demand.to_str().unwrap(), "--as", "ElectricPowerDemand"]).status.success());
    dir
}

#[test]
fn run_learns_and_reports_json() {
    let dir = loaded();
    let p = dir.path();
    let script = p.join("gmu.mtsa");
    let out = mtsa(p, &["--json", "run", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let exec = report["statements"].as_array().unwrap().iter().find(|s| s["kind"] == "EXECUTE").unwrap();
    assert!((exec["objective"].as_f64().unwrap() - 216.0984).abs() < 1e-6);
    assert!(p.join("params/PeakDemandBound.csv").exists());

    let out = mtsa(p, &["solve", "LearnPeakDemandBoundParameter"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("objective 216.0984"));

    let out = mtsa(p, &["export", "LearnPeakDemandBoundParameter", "--format", "milp"]);
    assert!(out.status.success());
    assert!(p.join("exports/LearnPeakDemandBoundParameter.lp").exists());
}

#[test]
fn monitor_reads_files_and_standard_input() {
    let dir = loaded();
    let p = dir.path();
    let script = p.join("gmu.mtsa");
    assert!(mtsa(p, &["run", script.to_str().unwrap()]).status.success());
    fs::write(p.join("s.csv"), "time,value\n1,13\n2,15\n3,12\n4,13\n").unwrap();
    let s = p.join("s.csv");
    let out = mtsa(p, &["--json", "monitor", "ELS_Monitoring_Recommendation", "--stream", s.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!((v["records"].as_u64(), v["fired"].as_u64()), (Some(4), Some(2)));

    let mut child = Command::new(env!("CARGO_BIN_EXE_mtsa"))
        .arg("-C")
        .arg(p)
        .args(["monitor", "ELS_Monitoring_Recommendation", "--stream", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"2,15\n3,10\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("\"indicator\":1") && lines[1].contains("\"indicator\":0"));
}

#[test]
fn exit_codes() {
    let dir = loaded();
    let p = dir.path();
    assert_eq!(mtsa(p, &["solve", "NoSuchEvent"]).status.code(), Some(1));
    fs::write(p.join("bad.mtsa"), "CREATE TABLE A (time HOURLY_INTERVAL);\nEXECUTE Nope;\n").unwrap();
    let bad = p.join("bad.mtsa");
    let out = mtsa(p, &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("statement 2"));
    assert_eq!(mtsa(p, &["frobnicate"]).status.code(), Some(2));
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(mtsa(empty.path(), &["solve", "X"]).status.code(), Some(1));
}
