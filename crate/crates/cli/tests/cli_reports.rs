//! Contract tests of the command-line surface: exit codes, report schema,
//! config precedence, output handling, and format equivalence.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_abspec"));
    c.env_remove("ABSPEC_OUTPUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn abspec")
}

fn parse_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_reports_schema_and_verdicts() {
    let out = run(&["classify", "--potential", "inverse-square", "--kappa", "0.5"]);
    assert!(out.status.success());
    let v = parse_stdout(&out);
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["command"], "classify");
    assert_eq!(v["results"]["left"]["verdict"], "lcc");
    assert_eq!(v["results"]["right"]["verdict"], "lpc");
    assert_eq!(v["results"]["structure"], "one_parameter_family");
    assert_eq!(v["inputs"]["potential"]["kappa"], 0.5);
    assert!(v.get("timing").is_none(), "timing must be opt-in");
}

#[test]
fn classify_lpc_case() {
    let out = run(&["classify", "--potential", "inverse-square", "--kappa", "1.0"]);
    assert!(out.status.success());
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["left"]["verdict"], "lpc");
    assert_eq!(v["results"]["right"]["verdict"], "lpc");
}

#[test]
fn missing_kappa_exits_2() {
    let out = run(&["classify", "--potential", "inverse-square"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--kappa"));
}

#[test]
fn malformed_number_exits_2_without_panic() {
    let out = run(&["eigen", "--kappa", "abc", "--emin", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!err.contains("panicked"), "stderr: {err}");
}

#[test]
fn theta_on_lpc_channel_exits_2() {
    let out = run(&[
        "eigen", "--kappa", "1.5", "--theta", "0.5", "--emin", "-10", "--emax", "-1e-8",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("essentially self-adjoint"));
}

#[test]
fn closure_scan_without_theta_is_valid_and_empty() {
    let out = run(&["eigen", "--kappa", "1.5", "--emin", "-5", "--emax", "-1e-4"]);
    assert!(out.status.success());
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["count"], 0);
}

#[test]
fn single_tau_for_fractional_flux_exits_2() {
    let out = run(&["ab", "spectrum", "--flux", "0.5", "--tau", "const:0", "--p-grid", "0:0:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tau_outside_range_exits_2() {
    let out = run(&[
        "ab", "spectrum", "--flux", "2", "--tau", "const:3.5", "--p-grid", "0:0:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integer_flux_principal_choice_has_no_curves() {
    let out = run(&[
        "ab", "spectrum", "--flux", "2", "--tau", "const:0", "--p-grid", "0:0:1", "--emin",
        "-10", "--emax", "-1e-6",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["singular_channels"], serde_json::json!([2]));
    for ch in v["results"]["channels"].as_array().unwrap() {
        for pt in ch["points"].as_array().unwrap() {
            assert!(pt["bound_states"].as_array().unwrap().is_empty());
        }
    }
}

#[test]
fn field_support_touching_the_axis_exits_2() {
    let out = run(&[
        "ab", "transform-check", "--flux", "0.5", "--r-center", "0.2", "--r-width", "0.3",
        "--n-r", "96",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("z-axis"));
}

#[test]
fn borderline_coupling_is_inconclusive_not_guessed() {
    let out = run(&[
        "classify", "--potential", "inverse-square", "--kappa", "0.995", "--numerical",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inconclusive"));
}

#[test]
fn output_file_is_written_atomically_and_resolves_env_dir() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["classify", "--kappa", "0.25", "--output", "report.json"])
        .env("ABSPEC_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let path = dir.path().join("report.json");
    assert!(path.is_file());
    assert!(!dir.path().join("report.tmp").exists(), "temp file must be renamed away");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "classify");
}

#[test]
fn config_file_supplies_defaults_and_cli_wins() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kappa": 1.5}"#).unwrap();

    // config alone drives the run
    let out = bin()
        .args(["classify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["left"]["verdict"], "lpc");

    // explicit flag overrides the config value
    let out = bin()
        .args(["classify", "--kappa", "0.5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["left"]["verdict"], "lcc");
}

#[test]
fn nested_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"nested": {"a": 1}}"#).unwrap();
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_and_json_carry_identical_numeric_content() {
    let args = [
        "eigen", "--kappa", "0.5", "--theta", "2.356194490192345", "--emin", "-10", "--emax",
        "-1e-6",
    ];
    let json_out = run(&args);
    assert!(json_out.status.success());
    let v = parse_stdout(&json_out);
    let e_json = v["results"]["eigenvalues"][0]["energy"].as_f64().unwrap();
    let r_json = v["results"]["eigenvalues"][0]["residual"].as_f64().unwrap();

    let mut csv_args = args.to_vec();
    csv_args.extend_from_slice(&["--format", "csv"]);
    let csv_out = run(&csv_args);
    assert!(csv_out.status.success());
    let text = String::from_utf8_lossy(&csv_out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,energy,residual"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), e_json.to_bits());
    assert_eq!(row[2].parse::<f64>().unwrap().to_bits(), r_json.to_bits());
}

#[test]
fn timing_block_is_attached_on_request() {
    let out = run(&["classify", "--kappa", "0.5", "--timing"]);
    let v = parse_stdout(&out);
    assert!(v["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn solve_ivp_reports_endpoint() {
    let out = run(&[
        "solve-ivp", "--potential", "constant", "--value", "0", "--x0", "1", "--u0", "1",
        "--du0", "0", "--target", "2",
    ]);
    assert!(out.status.success());
    let v = parse_stdout(&out);
    let end_u = v["results"]["end"]["u"].as_f64().unwrap();
    assert!((end_u - 1.0).abs() < 1e-10);
}

#[test]
fn rerunning_from_the_inputs_echo_reproduces_reports() {
    // the echo contains everything needed to re-issue the command
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = [
        "eigen", "--kappa", "-0.5", "--theta", "2.0", "--emin", "-20", "--emax", "-1e-6",
    ];
    assert!(bin().args(args).arg("--output").arg(&a).output().unwrap().status.success());
    let echo: Value =
        serde_json::from_str::<Value>(&std::fs::read_to_string(&a).unwrap()).unwrap()["inputs"]
            .clone();
    let rebuilt = [
        "eigen",
        "--kappa",
        &echo["kappa"].to_string(),
        "--theta",
        &echo["theta"].to_string(),
        "--emin",
        &echo["emin"].to_string(),
        "--emax",
        &echo["emax"].to_string(),
    ];
    assert!(bin().args(rebuilt).arg("--output").arg(&b).output().unwrap().status.success());
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "reports rebuilt from the echo must be byte-identical"
    );
}

#[test]
fn decompose_recovers_the_boundary_angle() {
    let out = run(&["decompose", "--kappa", "0.25", "--g-theta", "0.9"]);
    assert!(out.status.success());
    let v = parse_stdout(&out);
    assert_eq!(v["results"]["sigma"]["trivial"], false);
    let theta = v["results"]["sigma"]["theta"].as_f64().unwrap();
    assert!((theta - 0.9).abs() < 1e-8);
    let c = v["results"]["sigma"]["c"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-8);
}

fn assert_no_stray_tmp(dir: &Path) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(
            !name.to_string_lossy().ends_with(".tmp"),
            "stray temp file {name:?}"
        );
    }
}

#[test]
fn failed_validation_leaves_no_output_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("never.json");
    let out = bin()
        .args(["classify", "--potential", "inverse-square"])
        .arg("--output")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    assert_no_stray_tmp(dir.path());
}
