use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tradeoff_core::{closed_form_f, closed_form_g, tradeoff_residuals};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradeoff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing numeric field {key}"))
}

fn read_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn curve_three_points_at_d2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = run(&[
        "curve",
        "--dim",
        "2",
        "--points",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("a,b,F,G,I,D\n0,1,1,0.25,0,0\n"));
    let (_, rows) = read_rows(&path);
    assert_eq!(rows.len(), 3);
    let mid = &rows[1];
    assert_eq!(mid[0], 0.5);
    assert!((mid[4] - 0.5757).abs() < 1e-4);
    assert!((mid[5] - 0.25).abs() < 1e-12);
    assert_eq!(&rows[2][4..], &[1.0, 1.0]);
}

#[test]
fn curve_last_row_at_d4() {
    let out = run(&["curve", "--dim", "4", "--points", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().last().unwrap(), "1,0,0.125,0.125,1,1");
}

#[test]
fn curve_csv_stays_on_the_tradeoff() {
    // values are rounded to 12 significant digits, and the square roots in
    // the relation amplify that rounding near a = 1
    let dir = tempfile::tempdir().unwrap();
    for d in [2usize, 4, 8] {
        let path = dir.path().join(format!("d{d}.csv"));
        let ds = d.to_string();
        let out = run(&[
            "curve",
            "--dim",
            &ds,
            "--points",
            "101",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let (header, rows) = read_rows(&path);
        assert_eq!(header, "a,b,F,G,I,D");
        assert_eq!(rows.len(), 101);
        for r in rows {
            let (gf, quad) = tradeoff_residuals(r[2], r[3], d).unwrap();
            assert!(gf.abs() < 1e-9, "d={d} a={} gf={gf:e}", r[0]);
            assert!(quad.abs() < 1e-9, "d={d} a={} quad={quad:e}", r[0]);
        }
    }
}

#[test]
fn curve_json_rows() {
    let out = run(&["curve", "--dim", "2", "--points", "2", "--format", "json"]);
    let v = stdout_json(&out);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(num(&rows[1], "F"), 0.5);
    assert_eq!(num(&rows[0], "G"), 0.25);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = run(&[
        "mc",
        "--dim",
        "3",
        "--a",
        "0.4",
        "--samples",
        "5000",
        "--seed",
        "9",
        "--jobs",
        "1",
    ]);
    let b = run(&[
        "mc",
        "--dim",
        "3",
        "--a",
        "0.4",
        "--samples",
        "5000",
        "--seed",
        "9",
        "--jobs",
        "4",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["curve", "--dim", "3"]);
    let d = run(&["curve", "--dim", "3"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn mc_full_measurement_at_d2() {
    let out = run(&[
        "mc",
        "--dim",
        "2",
        "--a",
        "1",
        "--samples",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((num(&v, "F_mc") - 0.5).abs() <= 3.0 * num(&v, "F_stderr"));
    assert!(num(&v, "sigmas_G") <= 3.0);
}

#[test]
fn mc_without_measurement_is_exact() {
    let out = run(&[
        "mc",
        "--dim",
        "2",
        "--a",
        "0",
        "--samples",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(num(&v, "F_mc"), 1.0);
    assert!((num(&v, "G_mc") - 0.25).abs() <= 3.0 * num(&v, "G_stderr") + 1e-12);
}

#[test]
fn mc_intermediate_point_at_d3() {
    let out = run(&[
        "mc",
        "--dim",
        "3",
        "--a",
        "0.5",
        "--samples",
        "20000",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(num(&v, "F_closed"), closed_form_f(0.5, 3).unwrap());
    assert_eq!(num(&v, "G_closed"), closed_form_g(0.5, 3).unwrap());
    assert!(num(&v, "sigmas_F") <= 3.0 && num(&v, "sigmas_G") <= 3.0);
}

#[test]
fn optimize_endpoints_and_midpoint() {
    let v = stdout_json(&run(&["optimize", "--dim", "2", "--p", "0"]));
    assert_eq!(num(&v, "a"), 0.0);
    assert!((num(&v, "F") - 1.0).abs() < 1e-12);
    assert!((num(&v, "G") - 0.25).abs() < 1e-12);

    let v = stdout_json(&run(&["optimize", "--dim", "2", "--p", "1"]));
    assert!((num(&v, "F") - 0.5).abs() < 1e-12);
    assert!((num(&v, "G") - 0.5).abs() < 1e-12);

    let v = stdout_json(&run(&["optimize", "--dim", "2", "--p", "0.5"]));
    assert!(num(&v, "gf_residual").abs() < 1e-8);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "p",
            "x",
            "y",
            "a",
            "b",
            "F",
            "G",
            "I",
            "D",
            "form_residual",
            "gf_residual"
        ]
    );
}

#[test]
fn verify_passes_at_d2_and_reports_form_residual_at_d3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--dim",
        "2",
        "--seed",
        "42",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));

    let out = run(&["verify", "--dim", "3", "--seed", "42", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(num(&v, "form_residual_residual") < 1e-8);
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        vec!["curve", "--dim", "1"],
        vec!["verify", "--dim", "1", "--seed", "1"],
        vec!["verify", "--dim", "2"],
        vec!["mc", "--dim", "2", "--a", "0.5"],
        vec!["mc", "--dim", "2", "--a", "1.5", "--seed", "1"],
        vec!["mc", "--dim", "2", "--samples", "50", "--seed", "1"],
        vec!["optimize", "--p", "-0.2"],
        vec!["curve", "--points", "1"],
        vec!["curve", "--format", "xml"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("curve.csv");
    let out = run(&["curve", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
