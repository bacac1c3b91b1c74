//! End-to-end tests of the `qlbe` binary: exit codes, artifact layout,
//! error reporting, and bitwise reproducibility under a fixed seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qlbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlbe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).expect("config written");
    path.to_string_lossy().into_owned()
}

const COEFFICIENTS: &str = r#"{
  "experiment": "coefficients",
  "params": { "test_mass": 1.0, "gas_mass": 0.1, "inv_temperature": 1.0,
              "gas_density": 1.0, "hbar": 1.0 },
  "cross_section": { "kind": "constant", "sigma0": 1.0 }
}"#;

fn mc_config(rate_tolerance: f64) -> String {
    format!(
        r#"{{
  "experiment": "mc-relax",
  "params": {{ "test_mass": 1.0, "gas_mass": 0.01, "inv_temperature": 1.0,
              "gas_density": 1.0, "hbar": 0.0 }},
  "cross_section": {{ "kind": "constant", "sigma0": 1.0 }},
  "monte_carlo": {{
    "n_trajectories": 400, "t_end": 2500.0, "dt_record": 250.0, "seed": 1,
    "init": {{ "kind": "point", "p0": {{ "x": 0.0, "y": 0.0, "z": 1.0 }} }},
    "rate_tolerance": {rate_tolerance}
  }}
}}"#
    )
}

#[test]
fn run_writes_artifacts_and_reports_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", COEFFICIENTS);
    let out = tmp.path().join("out");
    let result = qlbe(&["run", &config, "--out", out.to_str().unwrap()]);

    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("check "));
    assert!(stdout.contains("pass"));

    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("quantity,value\n"));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "coefficients");
    assert_eq!(summary["all_passed"], true);
    assert!(summary["scalars"]["eta"].as_f64().unwrap() > 0.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["experiment"], "coefficients");
    assert!(manifest["version"].as_str().unwrap().contains('.'));
}

#[test]
fn missing_field_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let body = COEFFICIENTS.replace("\"inv_temperature\": 1.0,", "");
    let config = write_config(tmp.path(), "c.json", &body);
    let result = qlbe(&["run", &config]);

    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("inv_temperature"), "stderr: {stderr}");
}

#[test]
fn unknown_experiment_tag_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let body = COEFFICIENTS.replace("coefficients", "frobnicate");
    let config = write_config(tmp.path(), "c.json", &body);
    let result = qlbe(&["run", &config]);

    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("frobnicate"), "stderr: {stderr}");
}

#[test]
fn missing_block_error_names_block_and_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let body = COEFFICIENTS.replace("coefficients", "gaussian-lindblad");
    let config = write_config(tmp.path(), "c.json", &body);
    let result = qlbe(&["run", &config]);

    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("gaussian"), "stderr: {stderr}");
}

#[test]
fn unstable_timestep_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
  "experiment": "kramers",
  "params": { "test_mass": 1.0, "gas_mass": 0.1, "inv_temperature": 1.0,
              "gas_density": 1.0, "hbar": 0.0 },
  "cross_section": { "kind": "constant", "sigma0": 30.0 },
  "phase_grid": { "x_min": -8.0, "x_max": 8.0, "n_x": 32, "p_max": 6.0, "n_p": 32 },
  "initial_state": { "x0": 0.0, "var_x": 1.0, "p0": 0.5, "var_p": 1.0 },
  "evolution": { "t_end": 1.0, "dt": 5.0 }
}"#;
    let config = write_config(tmp.path(), "c.json", body);
    let out = tmp.path().join("out");
    let result = qlbe(&["run", &config, "--out", out.to_str().unwrap()]);

    assert_eq!(result.status.code(), Some(3), "{result:?}");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("numerical failure"), "stderr: {stderr}");
}

#[test]
fn failed_builtin_check_exits_three_after_writing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // An impossible tolerance: the run completes but its check fails.
    let config = write_config(tmp.path(), "c.json", &mc_config(1e-9));
    let out = tmp.path().join("out");
    let result = qlbe(&["run", &config, "--out", out.to_str().unwrap()]);

    assert_eq!(result.status.code(), Some(3), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("FAIL"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_passed"], false);
    assert!(out.join("results.csv").exists());
}

#[test]
fn same_seed_reproduces_artifacts_bitwise_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &mc_config(0.9));
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    let a = qlbe(&[
        "run", &config,
        "--out", out_a.to_str().unwrap(),
        "--seed", "11",
        "--threads", "1",
    ]);
    let b = qlbe(&[
        "run", &config,
        "--out", out_b.to_str().unwrap(),
        "--seed", "11",
        "--threads", "3",
    ]);
    assert_eq!(a.status.code(), Some(0), "{a:?}");
    assert_eq!(b.status.code(), Some(0), "{b:?}");

    let results_a = fs::read(out_a.join("results.csv")).unwrap();
    let results_b = fs::read(out_b.join("results.csv")).unwrap();
    assert_eq!(results_a, results_b, "ensemble statistics depend on thread count");
    assert_eq!(
        fs::read(out_a.join("summary.json")).unwrap(),
        fs::read(out_b.join("summary.json")).unwrap()
    );

    // A different seed must actually change the sampled data.
    let c = qlbe(&[
        "run", &config,
        "--out", out_b.to_str().unwrap(),
        "--seed", "12",
    ]);
    assert_eq!(c.status.code(), Some(0), "{c:?}");
    assert_ne!(results_a, fs::read(out_b.join("results.csv")).unwrap());
}

#[test]
fn compare_flow_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", COEFFICIENTS);
    let run_dir = tmp.path().join("run");
    let run = qlbe(&["run", &config, "--out", run_dir.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{run:?}");

    let spec = write_config(
        tmp.path(),
        "spec.json",
        &format!(r#"{{ "coefficients": "{}" }}"#, run_dir.display()),
    );
    let report_dir = tmp.path().join("report");
    let compare = qlbe(&["compare", &spec, "--out", report_dir.to_str().unwrap()]);
    assert_eq!(compare.status.code(), Some(0), "{compare:?}");

    let stdout = String::from_utf8_lossy(&compare.stdout);
    assert!(stdout.contains("quantum-ratio/computed-vs-formula"));
    let md = fs::read_to_string(report_dir.join("report.md")).unwrap();
    assert!(md.contains("## Agreement table"));
    let csv = fs::read_to_string(report_dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("section,quantity,value_a,value_b,rel_diff,tolerance,passed\n"));
}

#[test]
fn compare_with_missing_run_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_config(
        tmp.path(),
        "spec.json",
        r#"{ "coefficients": "/nonexistent/run-dir" }"#,
    );
    let result = qlbe(&["compare", &spec]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn version_flag_exits_cleanly() {
    let result = qlbe(&["--version"]);
    assert_eq!(result.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&result.stdout).contains("qlbe"));
}
