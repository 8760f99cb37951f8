use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn teachrisk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teachrisk")).args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"trails": 3}"#).unwrap();
    let out = teachrisk(&["sweep-risk", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}

#[test]
fn unknown_strategy_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = teachrisk(&["teach", "--strategy", "oracle"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_bounds_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.json");
    fs::write(
        &config,
        r#"{"scenario": {"grid_size": 4, "macrocell_size": 2, "gamma": 0.9}, "trials": 5, "directions": 20}"#,
    )
    .unwrap();
    let out = teachrisk(&["verify-bounds", "--config", config.to_str().unwrap(), "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violations: 0"));
    let csv = fs::read_to_string(dir.path().join("verify_bounds.csv")).unwrap();
    assert!(csv.lines().count() > 5);
}

#[test]
fn chain_teaching_session_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = teachrisk(&["teach", "--no-timing"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("strategy trgreedy: taught [0], stopped early: true"), "{stdout}");

    let csv = fs::read_to_string(dir.path().join("teach_session.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "round,strategy,feature_index,teaching_risk,view_distance,true_perf,rel_perf,elapsed_ms");
    assert_eq!(lines.len(), 3);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[..3], &["0", "trgreedy", ""]);
    let rho: f64 = first[3].parse().unwrap();
    assert!((rho - 1.0).abs() < 1e-12);
    let second: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(second[2], "0");
    // only the central cell is seen; teaching feature 0 leaves risk sqrt(3/5)
    let rho: f64 = second[3].parse().unwrap();
    assert!((rho - 0.6f64.sqrt()).abs() < 1e-12);
    assert_eq!(second[6].parse::<f64>().unwrap(), 1.0);
    assert_eq!(second[7], "0.0000000000000000e0");
}
