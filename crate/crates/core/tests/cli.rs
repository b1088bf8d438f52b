use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gslq::cases;
use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn gslq(cmd: &str, problem: &Path, config: Option<&Path>, out: &Path, extra: &[&str]) -> i32 {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gslq"));
    c.arg(cmd).arg("--problem").arg(problem).arg("--out").arg(out);
    if let Some(cfg) = config {
        c.arg("--config").arg(cfg);
    }
    c.args(extra);
    c.output().unwrap().status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_17_digits(csv: &str) {
    let row = csv.lines().nth(1).expect("at least one data row");
    let float = row.split(',').find(|c| c.contains('e')).expect("a float cell");
    let mantissa = float.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{float}");
}

#[test]
fn validate_accepts_example_one() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    assert_eq!(gslq("validate", &problem, None, &ws.path("out"), &[]), 0);
    let v = read_json(&ws.path("out/validation.json"));
    assert_eq!(v["valid"], true);
    assert_eq!(v["parameterVerdict"]["valid"], true);
}

#[test]
fn palm_iteration_cap_exits_three_with_artifacts() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"maxIter": 40, "rho": 50, "gamma": 1}"#);
    let out = ws.path("out");
    assert_eq!(gslq("solve-palm", &problem, Some(&config), &out, &[]), 3);
    for name in ["report.json", "trace.csv", "feasibility.dat", "psi.dat", "impulse.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,psi,feas,"));
    assert_eq!(trace.lines().count(), 41);
    assert_17_digits(&trace);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["solver"], "palm");
    assert_eq!(report["solverStatus"], "max-iterations");
    assert_eq!(report["iterations"], 40);
    assert_eq!(report["diagnostics"]["descentViolations"], 0);
}

#[test]
fn palm_long_run_zeroes_the_coupling_block() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"maxIter": 20000, "rho": 100, "gamma": 50, "kktEvery": 1000}"#);
    let out = ws.path("out");
    gslq("solve-palm", &problem, Some(&config), &out, &[]);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["sparsityPattern"], serde_json::json!([[1, 0], [1, 1]]));
    assert_eq!(report["k"][0][2], 0.0);
}

#[test]
fn strict_params_rejects_invalid_weights() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"sigma": 0.0416666666666666667, "maxIter": 5}"#);
    assert_eq!(gslq("solve-palm", &problem, Some(&config), &ws.path("out"), &["--strict-params"]), 2);
    // waived mode runs and records the waiver
    assert_eq!(gslq("solve-palm", &problem, Some(&config), &ws.path("waived"), &[]), 3);
    let report = read_json(&ws.path("waived/report.json"));
    assert_eq!(report["waivers"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_config_key_is_a_parse_error() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"rhoo": 50}"#);
    assert_eq!(gslq("solve-palm", &problem, Some(&config), &ws.path("out"), &[]), 2);
}

#[test]
fn malformed_or_missing_problem_is_a_parse_error() {
    let ws = Workspace::new();
    let bad = ws.file("bad.json", r#"{"A": [[1, 2]], "B1": [[1]]}"#);
    assert_eq!(gslq("validate", &bad, None, &ws.path("out"), &[]), 2);
    assert_eq!(gslq("validate", &ws.path("missing.json"), None, &ws.path("out"), &[]), 2);
    let status = Command::new(env!("CARGO_BIN_EXE_gslq")).arg("solve-palm").output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn eval_gain_reports_stability() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let good = ws.file("good.json", r#"{"gain": [[1.121, 0.935, 0.0], [0.508, 0.496, 0.865]]}"#);
    assert_eq!(gslq("eval-gain", &problem, Some(&good), &ws.path("good"), &[]), 0);
    let report = read_json(&ws.path("good/report.json"));
    assert_eq!(report["status"], "stabilizing");
    assert!(report["evaluation"]["spectralAbscissa"].as_f64().unwrap() < 0.0);
    assert!(report["evaluation"]["h2Cost"].as_f64().unwrap() > 0.0);
    let impulse = fs::read_to_string(ws.path("good/impulse.csv")).unwrap();
    assert!(impulse.starts_with("t,x1,x2,x3\n"));

    let bad = ws.file("bad.json", r#"{"gain": [[-1, 0, 0], [0, 0, -1]]}"#);
    assert_eq!(gslq("eval-gain", &problem, Some(&bad), &ws.path("bad"), &[]), 0);
    let report = read_json(&ws.path("bad/report.json"));
    assert_eq!(report["status"], "not-stabilizing");
    assert!(report["evaluation"]["h2Cost"].is_null());

    let missing = ws.file("none.json", "{}");
    assert_eq!(gslq("eval-gain", &problem, Some(&missing), &ws.path("none"), &[]), 2);
}

#[test]
fn admm_converges_at_large_beta() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"beta": 300, "gamma": 7, "maxIter": 3000, "tolFeas": 1e-2, "initValue": 50}"#);
    let out = ws.path("out");
    assert_eq!(gslq("solve-admm", &problem, Some(&config), &out, &[]), 0);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["solver"], "admm");
    assert_eq!(report["solverStatus"], "converged");
    assert_eq!(report["diagnostics"]["convergenceClaimed"], false);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().contains("structure_res,coupling_res"));
}

#[test]
fn group_l1_baseline_runs() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"beta": 300, "gamma": 50, "maxIter": 200}"#);
    let out = ws.path("out");
    assert_eq!(gslq("solve-l1", &problem, Some(&config), &out, &[]), 3);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["solver"], "admm-l1");
}

#[test]
fn sweep_writes_one_directory_per_grid_point() {
    let ws = Workspace::new();
    let problem = ws.file("p.json", cases::EXAMPLE1_JSON);
    let config = ws.file("c.json", r#"{"maxIter": 20, "gammaValues": [0.1, 50], "rhoValues": [10, 50], "threads": 2}"#);
    let out = ws.path("out");
    assert_eq!(gslq("sweep", &problem, Some(&config), &out, &[]), 0);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("dir,rho,gamma,status,"));
    assert_eq!(summary.lines().count(), 5);
    for k in 0..4 {
        assert!(out.join(format!("run-{k:03}/report.json")).exists());
    }
}
