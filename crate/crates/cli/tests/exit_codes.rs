//! Exit-code contract and summary-content checks for every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vipcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vipcut"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal kills")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().expect("temp dir"),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).expect("config written");
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).expect("summary exists");
    serde_json::from_str(&text).expect("summary is JSON")
}

#[test]
fn builtin_solve_converges_with_small_error() {
    let ws = Workspace::new();
    let config = ws.file("p1.json", r#"{"problem": {"builtin": "p1_box"}}"#);
    let trace = ws.path("trace.csv");
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);

    let report = read_json(&summary);
    assert_eq!(report["status"], "converged");
    let err = report["err_to_solution"].as_f64().expect("err recorded");
    assert!(err <= 1e-3, "final error {err} above 1e-3");

    // Summary totals equal trace aggregates: one CSV row per iteration.
    let text = fs::read_to_string(&trace).expect("trace exists");
    let rows = text.lines().count() - 1;
    assert_eq!(report["iterations"].as_u64().unwrap() as usize, rows);
}

#[test]
fn invalid_gamma_is_its_own_failure_class() {
    let ws = Workspace::new();
    let config = ws.file(
        "bad.json",
        r#"{"problem": {"builtin": "p1_box"}, "solver": {"gamma": 2.0}}"#,
    );
    let out = vipcut(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gamma"), "stderr was {stderr:?}");
}

#[test]
fn malformed_json_is_an_invalid_config() {
    let ws = Workspace::new();
    let config = ws.file("broken.json", r#"{"problem": {"builtin": "p1_box""#);
    let out = vipcut(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn unknown_keys_are_rejected() {
    let ws = Workspace::new();
    let config = ws.file(
        "typo.json",
        r#"{"problem": {"builtin": "p1_box"}, "solvr": {"tol": 1e-6}}"#,
    );
    let out = vipcut(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("solvr"), "stderr was {stderr:?}");
}

#[test]
fn iteration_cap_is_reported_as_exit_two() {
    let ws = Workspace::new();
    let config = ws.file(
        "cap.json",
        r#"{"problem": {"builtin": "p1_box"}, "solver": {"max_iter": 50}}"#,
    );
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert_eq!(read_json(&summary)["status"], "iteration_cap");
}

#[test]
fn explicit_problem_supports_the_damped_field_baseline() {
    let ws = Workspace::new();
    let config = ws.file(
        "explicit.json",
        r#"{
          "problem": {
            "dimension": 2,
            "operator": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
            "field": {"kind": "matrix", "g": [[1.0, 0.0], [0.0, 1.0]], "a": [2.0, 0.5]},
            "known_solution": [1.0, 0.5],
            "x0": [-1.0, 0.0]
          },
          "solver": {"algorithm": "yamada_ogura", "lambda0": 1.0, "tol": 1e-4}
        }"#,
    );
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let report = read_json(&summary);
    assert_eq!(report["algorithm"], "yamada_ogura");
    let err = report["err_to_solution"].as_f64().expect("err recorded");
    assert!(err <= 1e-2, "baseline landed {err} away");
}

#[test]
fn diagnose_passes_on_a_box_projection() {
    let ws = Workspace::new();
    let config = ws.file(
        "diag.json",
        r#"{
          "problem": {
            "dimension": 2,
            "operator": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}
          },
          "diagnostics": {
            "checks": [
              {"kind": "cutter",
               "region": {"kind": "cube", "dimension": 2, "half_width": 3.0, "count": 2000}},
              {"kind": "sqne", "alpha": 1.0,
               "region": {"kind": "cube", "dimension": 2, "half_width": 3.0, "count": 2000}}
            ]
          },
          "seed": 11
        }"#,
    );
    let out = vipcut(&["diagnose", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cutter: pass"), "stdout was {stdout:?}");
}

#[test]
fn diagnose_fails_the_reflection_with_a_witness() {
    let ws = Workspace::new();
    let config = ws.file(
        "refl.json",
        r#"{
          "problem": {
            "dimension": 2,
            "operator": {"kind": "relaxed", "alpha": 2.0,
                         "inner": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}}
          },
          "diagnostics": {
            "checks": [
              {"kind": "sqne", "alpha": 0.5,
               "region": {"kind": "cube", "dimension": 2, "half_width": 3.0, "count": 2000}}
            ]
          }
        }"#,
    );
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "diagnose",
        "--config",
        config.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    let report = read_json(&summary);
    assert_eq!(report["all_passed"], Value::Bool(false));
    let check = &report["checks"][0];
    assert_eq!(check["passed"], Value::Bool(false));
    let witness = check["witness"].as_array().expect("witness recorded");
    assert_eq!(witness.len(), 2);
    assert!(check["worst_violation"].as_f64().unwrap() > 0.0);
}

#[test]
fn decrease_grid_estimates_are_monotone_in_the_summary() {
    let ws = Workspace::new();
    let config = ws.file(
        "grid.json",
        r#"{
          "problem": {
            "dimension": 2,
            "operator": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}
          },
          "diagnostics": {
            "checks": [
              {"kind": "decrease_grid",
               "region": {"kind": "box", "lo": [-2.0, -2.0], "hi": [3.0, 3.0], "count": 4000},
               "r_grid": [0.0, 0.25, 0.5, 1.0]}
            ]
          }
        }"#,
    );
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "diagnose",
        "--config",
        config.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let report = read_json(&summary);
    let estimates = report["decrease_grids"][0]["estimates"]
        .as_array()
        .expect("grid recorded");
    assert_eq!(estimates.len(), 4);
    let values: Vec<f64> = estimates
        .iter()
        .map(|pair| pair[1].as_f64().expect("estimate"))
        .collect();
    assert_eq!(values[0], 0.0, "no decrease is possible at distance zero");
    for window in values.windows(2) {
        assert!(window[0] <= window[1], "estimates dipped: {values:?}");
    }
}

#[test]
fn explicit_bilevel_run_reports_the_grid_oracle_gap() {
    let ws = Workspace::new();
    let config = ws.file(
        "bilevel.json",
        r#"{
          "bilevel": {
            "objective": {"kind": "affine_squared", "a": [2.0, 1.0], "b": 2.0},
            "constraint": {"kind": "box", "lo": [0.0, 0.0], "hi": [2.0, 2.0]},
            "dimension": 2,
            "p": 2.0,
            "lambda": 1.0,
            "inner_tol": 1e-12,
            "smoothness": 10.0,
            "x0": [1.8, 1.9],
            "fejer_samples": [[0.0, 2.0], [0.5, 1.0], [1.0, 0.0]],
            "grid_oracle_step": 0.01
          },
          "solver": {"max_iter": 3000, "tol": 1e-4, "consecutive": 5}
        }"#,
    );
    let summary = ws.path("summary.json");
    let out = vipcut(&[
        "bilevel",
        "--config",
        config.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let report = read_json(&summary);
    let gap = report["grid_oracle"]["gap_to_solution"]
        .as_f64()
        .expect("gap recorded");
    assert!(gap <= 1e-2, "selection landed {gap} from the grid argmin");
    let argmin = report["grid_oracle"]["argmin"].as_array().unwrap();
    assert!((argmin[0].as_f64().unwrap() - 0.8).abs() <= 1e-9);
    assert!((argmin[1].as_f64().unwrap() - 0.4).abs() <= 1e-9);
}

#[test]
fn bench_writes_one_row_per_builtin_in_suite_order() {
    let ws = Workspace::new();
    let csv = ws.path("bench.csv");
    let out = vipcut(&["bench", "--out", csv.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {:?}", out.stderr);
    let text = fs::read_to_string(&csv).expect("bench csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[0],
        "name,algorithm,status,iterations,final_fix_residual,final_step_norm,err_to_solution"
    );
    let names: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "p1_box",
            "g_weighted_box",
            "bilevel_symmetric",
            "bilevel_pnorm2"
        ]
    );
    for line in &lines[1..] {
        assert!(line.contains(",converged,"), "entry did not settle: {line}");
    }
}

#[test]
fn missing_required_argument_is_an_invalid_invocation() {
    let out = vipcut(&["solve"]);
    assert_eq!(exit_code(&out), 3);
}
