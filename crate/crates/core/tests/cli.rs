use std::path::Path;
use std::process::{Command, Output};

fn lvload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvload")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn synth_writes_the_expected_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let o = lvload(&["synth", "--feeders", "2", "--days", "100", "--seed", "7", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["load/f001.csv", "load/f002.csv", "temperature_actual.csv", "temperature_forecast.csv", "feeders.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let load = std::fs::read_to_string(out.join("load/f001.csv")).unwrap();
    assert_eq!(load.lines().count(), 1 + 100 * 24);
    let manifest = std::fs::read_to_string(out.join("feeders.csv")).unwrap();
    assert!(manifest.starts_with("feeder,n_customers,mean_daily_kwh\nf001,8,"));
}

#[test]
fn synth_evaluate_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = root.join("data");
    assert!(lvload(&["synth", "--feeders", "1", "--days", "70", "--seed", "2", "--out", path(&data)]).status.success());
    let cfg = root.join("eval.cfg");
    std::fs::write(&cfg, "data_dir = data\nmethods = LW, SMA-4W, KDE-W\ntest_start = 60\ntest_days = 3\noutput_dir = out\n")
        .unwrap();
    let o = lvload(&["evaluate", "--config", path(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("method,mean_MAPE\n"));
    assert_eq!(stdout.lines().count(), 4);

    let out = root.join("out");
    for f in ["report.csv", "audit.csv", "failures.csv", "forecasts/f001/KDE-W.csv", "forecasts/f001/LW.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let o = lvload(&["report", "--in", path(&out)]);
    assert!(o.status.success());
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.starts_with("method,metric,value\n"));
    assert!(summary.contains("KDE-W,RCRPS,"));
    let o = lvload(&["report", "--in", path(&out), "--by", "day"]);
    assert!(o.status.success());
    assert!(out.join("summary_by_day.csv").is_file());
    assert!(String::from_utf8(o.stdout).unwrap().contains("LW,MAPE,d4,"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    assert_eq!(lvload(&["evaluate", "--config", path(&missing)]).status.code(), Some(1));
    assert_eq!(lvload(&["synth", "--feeders", "1", "--days", "40", "--seed", "1", "--colour", "red"]).status.code(), Some(1));
    assert_eq!(lvload(&["frobnicate"]).status.code(), Some(1));
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "methods = LW\ntest_days = soon\n").unwrap();
    let o = lvload(&["evaluate", "--config", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eval.cfg");
    std::fs::create_dir_all(dir.path().join("data/load")).unwrap();
    std::fs::write(dir.path().join("data/load/f.csv"), "timestamp,load_kwh\n2014-01-06 00:00,x\n").unwrap();
    std::fs::write(&cfg, "data_dir = data\nmethods = LW\ntest_start = 40\ntest_days = 1\noutput_dir = out\n").unwrap();
    assert_eq!(lvload(&["evaluate", "--config", path(&cfg)]).status.code(), Some(2));
    assert_eq!(lvload(&["report", "--in", path(&dir.path().join("empty"))]).status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let o = lvload(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("sweep-temp"));
}
