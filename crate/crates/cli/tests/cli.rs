use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn qreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qreg"))
        .args(args)
        .env_remove("QREG_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn path_arg(name: &str) -> String {
    data(name).display().to_string()
}

#[test]
fn project_interval() {
    let out = qreg(&["project", &path_arg("interval.json"), "--eta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["x"], serde_json::json!([0.5]));

    let out = qreg(&["project", &path_arg("interval.json"), "--eta", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["x"], serde_json::json!([1.0]));
    assert_eq!(json(&out)["active_set"], serde_json::json!([1]));
}

#[test]
fn project_rejects_bad_input() {
    let out = qreg(&["project", &path_arg("malformed.json"), "--eta", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1);

    let out = qreg(&["project", &path_arg("interval.json"), "--eta", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn path_interval_json_and_csv() {
    let out = qreg(&["path", &path_arg("interval.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["breakpoints"], serde_json::json!([0.0, 2.0]));
    assert_eq!(v["eta_star"], serde_json::json!(2.0));
    assert_eq!(v.as_object().unwrap().len(), 3);

    let out = qreg(&["path", &path_arg("interval.json"), "--format", "csv"]);
    assert_eq!(stdout(&out), "i,eta,x0\n0,0,0\n1,2,1\n");
}

#[test]
fn path_ot_neg_identity() {
    let out = qreg(&["path", &path_arg("neg_identity_4.json")]);
    assert_eq!(out.status.code(), Some(0));
    let bps = json(&out)["breakpoints"].clone();
    let bps: Vec<f64> = serde_json::from_value(bps).unwrap();
    assert_eq!(bps.len(), 2);
    assert!((bps[1] - 8.0).abs() < 1e-9);
}

#[test]
fn path_empty_polytope() {
    let out = qreg(&["path", &path_arg("empty.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_three_points_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = qreg(&[
        "analyze",
        &path_arg("three_points.json"),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let line = stdout(&out);
    assert!(line.starts_with("eta_star=54 "), "{line}");
    assert!(line.trim_end().ends_with("bounds_ok=true"), "{line}");

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("eta,E,segment_index\n"));
    // the first breakpoint after 0 shows up as a sample
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["eta_star_formula"].as_f64().unwrap() - 54.0).abs() < 1e-6);
    assert!(csv.lines().count() > 512);
}

#[test]
fn analyze_interval_summary() {
    let out = qreg(&["analyze", &path_arg("interval.json")]);
    assert_eq!(stdout(&out), "eta_star=2 slope=0.5 bounds_ok=true\n");
}

#[test]
fn analyze_zero_cost_is_flagged() {
    let out = qreg(&["analyze", &path_arg("square_zero_cost.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "eta_star=0 slope=none bounds_ok=true flag=AllVerticesOptimal\n"
    );
}

#[test]
fn ot_threshold_and_slope_bound() {
    let out = qreg(&["ot", "threshold", &path_arg("neg_identity_5.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "eta_star=10 eta_star_path=10 agree=true\n");

    let out = qreg(&["ot", "slope-bound", &path_arg("constant_cost.json")]);
    assert_eq!(stdout(&out), "0\n");
}

#[test]
fn ot_experiment_csv() {
    let out = qreg(&["ot", "experiment", "--n-list", "2,3,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,L_N,bound,ratio"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (row, n) in rows.iter().zip(["2", "3", "4"]) {
        assert_eq!(row[0], n);
        assert!(row[3].parse::<f64>().unwrap() >= 1.0);
    }
}

#[test]
fn ot_experiment_marks_skipped() {
    let out = qreg(&["ot", "experiment", "--n-list", "2,40", "--max-n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out)
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("40,skipped,"));
}

#[test]
fn oracle_check_random_is_deterministic() {
    let a = qreg(&["oracle-check", "--count", "5", "--seed", "3"]);
    let b = qreg(&["oracle-check", "--count", "5", "--seed", "3"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 5);
}

#[test]
fn budget_env_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_qreg"))
        .args(["path", &path_arg("interval.json"), "--budget", "1000"])
        .env("QREG_BUDGET", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn e_curve_round_trips_through_solver() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = qreg(&[
        "analyze",
        &path_arg("three_points.json"),
        "--grid",
        "32",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let inst = qreg_core::OtInstance::quadratic_1d(3).qlp();
    let x_star = qreg_core::solve_qlp(&inst, 1000.0).unwrap().x;
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if cols[0] == 0.0 {
            continue;
        }
        let x = qreg_core::solve_qlp(&inst, cols[0]).unwrap().x;
        let e = qreg_core::linalg::dot(&inst.c, &x) - qreg_core::linalg::dot(&inst.c, &x_star);
        assert!(
            (e - cols[1]).abs() <= 1e-7,
            "eta {}: {e} vs {}",
            cols[0],
            cols[1]
        );
    }
}
