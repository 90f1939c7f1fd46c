//! Behavioral tests of the installed binary: schemas, determinism, exit
//! codes, and consistency with the library they wrap.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_onebit-isac"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn write_constellation(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn capacity_csv_schema_and_symmetry() {
    let out = run(&["capacity", "--snr-min", "-4", "--snr-max", "4", "--snr-step", "4"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,C_comm,C_sense"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 3);
        // equal noise powers give equal columns
        assert_eq!(cols[1], cols[2]);
        // 12 significant digits in scientific notation
        assert!(cols[1].contains('e'), "row {row}");
    }
}

#[test]
fn capacity_rows_match_library_values() {
    let out = run(&["capacity", "--snr-min", "0", "--snr-max", "0", "--snr-step", "1"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let row = text.lines().nth(1).unwrap();
    let c_comm: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    let grid = onebit_isac::distributions::FadingGrid::<f64>::build(64, 64).unwrap();
    let expect = onebit_isac::information::c_comm_closed_form(
        onebit_isac::distributions::PowerValue::new(1.0).unwrap(),
        1.0,
        &grid,
    )
    .unwrap()
    .get();
    assert!((c_comm - expect).abs() < 1e-11, "{c_comm} vs {expect}");
}

#[test]
fn capacity_vanishing_power_gives_zero_rates() {
    let out = run(&["capacity", "--snr-min", "-400", "--snr-max", "-400", "--snr-step", "1"]);
    assert!(out.status.success());
    let row = stdout_str(&out);
    let row = row.lines().nth(1).unwrap();
    let c: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(c.abs() < 1e-12);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "rates".to_string(),
            "--snr-min".into(),
            "0".into(),
            "--snr-max".into(),
            "2".into(),
            "--snr-step".into(),
            "2".into(),
            "--lambda".into(),
            "0".into(),
            "--lambda".into(),
            "1".into(),
            "--out".into(),
            p.to_string_lossy().into_owned(),
        ]
    };
    let s1 = bin().args(args(&a)).status().unwrap();
    let s2 = bin().args(args(&b)).env("ONEBIT_ISAC_THREADS", "2").status().unwrap();
    assert!(s1.success() && s2.success());
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn mi_reports_symmetry_and_capacity_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let qpsk = write_constellation(
        dir.path(),
        "qpsk.json",
        r#"{"points": [[0.7071067811865476, 0.7071067811865476],
                       [-0.7071067811865476, 0.7071067811865476],
                       [-0.7071067811865476, -0.7071067811865476],
                       [0.7071067811865476, -0.7071067811865476]],
            "probs": [0.25, 0.25, 0.25, 0.25]}"#,
    );
    let out = run(&["mi", "--constellation", &qpsk]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["is_symmetric"], serde_json::Value::Bool(true));
    assert!(v["c_comm_gap"].as_f64().unwrap().abs() < 1e-4);
    assert!(v["c_sense_gap"].as_f64().unwrap().abs() < 1e-4);

    // BPSK at P = 10: not symmetric, and strictly below the closed form
    let a = 10f64.sqrt();
    let bpsk = write_constellation(
        dir.path(),
        "bpsk.json",
        &format!(r#"{{"points": [[{a}, 0.0], [-{a}, 0.0]], "probs": [0.5, 0.5]}}"#),
    );
    let out = run(&["mi", "--constellation", &bpsk]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["is_symmetric"], serde_json::Value::Bool(false));
    assert!(v["c_comm_gap"].as_f64().unwrap() > 0.1);

    // a single zero point carries no information
    let zero = write_constellation(
        dir.path(),
        "zero.json",
        r#"{"points": [[0.0, 0.0]], "probs": [1.0]}"#,
    );
    let out = run(&["mi", "--constellation", &zero]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(v["cmi"]["value"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["smi"]["value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn mi_rejects_malformed_constellations_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_constellation(dir.path(), "bad.json", r#"{"points": [[1.0, 0.0]]}"#);
    let out = run(&["mi", "--constellation", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("probs"), "stderr should name the missing field: {err}");

    let bad = write_constellation(
        dir.path(),
        "bad2.json",
        r#"{"points": [[1.0, 0.0]], "probs": [0.5, 0.5]}"#,
    );
    let out = run(&["mi", "--constellation", &bad]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn power_control_writes_per_lambda_curves_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("pc.csv");
    let out = run(&[
        "power-control",
        "--lambda",
        "0",
        "--lambda",
        "1",
        "--gamma-points",
        "41",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let flat = std::fs::read_to_string(dir.path().join("pc_lambda_0.000.csv")).unwrap();
    let mut lines = flat.lines();
    assert_eq!(lines.next(), Some("gamma_c,power"));
    let powers: Vec<f64> =
        lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(powers.len(), 41);
    for &p in &powers {
        assert!((p - 1.0).abs() < 1e-4, "lambda=0 curve must be flat at P, got {p}");
    }

    let comm = std::fs::read_to_string(dir.path().join("pc_lambda_1.000.csv")).unwrap();
    let powers: Vec<f64> = comm
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(powers[0], 0.0, "zero gain gets zero power");
    assert!(powers[1] == 0.0, "cutoff extends past the first positive gain");
    let peak = powers.iter().cloned().fold(0.0f64, f64::max);
    assert!(peak > 1.0);
    assert!(*powers.last().unwrap() < peak, "profile decays after its peak");

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pc_meta.json")).unwrap())
            .unwrap();
    let metas = meta.as_array().unwrap();
    assert_eq!(metas.len(), 2);
    assert!(metas[1]["cutoff_gamma_c"].as_f64().unwrap() > 0.0);
    assert_eq!(metas[0]["snr_db"].as_f64().unwrap(), 0.0);
}

#[test]
fn power_control_csv_to_stdout_is_a_usage_error() {
    let out = run(&["power-control", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rates_schema_and_lambda_zero_meets_the_sensing_baseline() {
    let out = run(&[
        "rates",
        "--snr-min",
        "0",
        "--snr-max",
        "0",
        "--snr-step",
        "2",
        "--lambda",
        "0",
        "--lambda",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("snr_db,lambda,R_c_csit,R_s,C_comm_csir,C_sense_csir")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // lambda = 0 row: sensing rate equals the baseline; lambda = 1 row:
    // CSIT communication rate dominates the CSIR capacity
    let l0 = &rows[0];
    assert_eq!(l0[1], 0.0);
    assert!((l0[3] - l0[5]).abs() < 1e-4, "R_s {} vs C_sense {}", l0[3], l0[5]);
    let l1 = &rows[1];
    assert_eq!(l1[1], 1.0);
    assert!(l1[2] >= l1[4] - 1e-6);
}

#[test]
fn simulate_passes_and_scales_to_small_n() {
    let out = run(&["simulate", "--n", "20000"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["all_pass"], serde_json::Value::Bool(true));
    assert_eq!(v["cases"].as_array().unwrap().len(), 20);
    // the chi-square criterion scales with n; a tiny run still passes
    let out = run(&["simulate", "--n", "100"]);
    assert!(out.status.success());
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["capacity", "--snr-step", "-2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["rates", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
    // an output path whose parent is a file cannot be created
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("y.csv");
    let out = run(&[
        "capacity",
        "--snr-min",
        "0",
        "--snr-max",
        "0",
        "--snr-step",
        "1",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
