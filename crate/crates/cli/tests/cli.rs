use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn torlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torlab")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all = args.to_vec();
    all.extend(["--out", out]);
    torlab(&all)
}

#[test]
fn passing_run_writes_report_and_tables() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["lyapunov"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("[3] PASS")));
    assert!(stdout.ends_with("lyapunov PASS\n"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["config"]["seed"], "0");
    assert!(dir.path().join("tables/lyapunov.csv").exists());
}

#[test]
fn failed_verdict_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["lyapunov", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("lyapunov FAIL\n"));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["lyapunov", "--set", "nope=1"][..],
        &["lyapunov", "--set", "seed"],
        &["homology", "--matrix", "2,0;0,1"],
        &["baseline", "--matrix", "1,1;0,1"],
        &["lyapunov", "--config", "/nonexistent/torlab.conf"],
    ] {
        let o = run_in(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8(o.stderr).unwrap().starts_with("error: "));
    }
    assert_eq!(torlab(&["keys", "nope"]).status.code(), Some(2));
}

#[test]
fn config_file_sections_and_json_output() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "experiment = homology\nseed = 5\nmatrix = 1,1,0;1,2,1;0,1,2\n").unwrap();
    let o = run_in(&dir.path().join("out"), &["homology", "--config", conf.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["experiment"], "homology");
    assert_eq!(v["seed"], 5);
    assert!(v["verdicts"].as_array().unwrap().iter().all(|x| x["criterion"].is_string()));

    std::fs::write(&conf, "experiment = lyapunov\n").unwrap();
    assert_eq!(run_in(dir.path(), &["homology", "--config", conf.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn same_seed_reproduces_report() {
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v.as_object_mut().unwrap().remove("config");
        v
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &["lyapunov", "--seed", "3"]).status.code(), Some(0));
    }
    assert_eq!(strip(a.path()), strip(b.path()));
    assert_eq!(std::fs::read(a.path().join("tables/lyapunov.csv")).unwrap(), std::fs::read(b.path().join("tables/lyapunov.csv")).unwrap());
}

#[test]
fn keys_lists_defaults() {
    let o = torlab(&["keys", "thm-b"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.lines().any(|l| l.starts_with("epsilon_budget") && l.contains("0.2")));
}
