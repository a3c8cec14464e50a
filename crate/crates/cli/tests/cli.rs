//! End-to-end runs of the `aci` binary entry point.

use std::path::{Path, PathBuf};

use aci_cli::io::read_intervals;
use aci_cli::main_with_args;
use tempfile::TempDir;

fn write_input(dir: &Path, rows: usize, positive: bool) -> PathBuf {
    let path = dir.join("input.csv");
    let mut body = String::from("t,y,mu_hat\n");
    for t in 1..=rows {
        let mu = if positive { 50.0 + (t as f64 * 0.1).sin() * 10.0 } else { (t as f64 * 0.1).sin() };
        let wiggle = ((t * 7919) % 101) as f64 / 100.0 - 0.5;
        let y = if positive { mu * (1.0 + 0.3 * wiggle) } else { mu + wiggle };
        body.push_str(&format!("{t},{y},{mu}\n"));
    }
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["aci"];
    argv.extend_from_slice(args);
    main_with_args(argv)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["run", "--no-such-flag"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), 50, false);
    let out = dir.path().join("out");
    assert_eq!(run(&["run", "--input", s(&input), "--method", "ACI", "--alpha", "1.5", "--out", s(&out)]), 1);
    // SF-OGD with the linear constructor needs D.
    assert_eq!(
        run(&[
            "run",
            "--input",
            s(&input),
            "--method",
            "SF-OGD",
            "--alpha",
            "0.9",
            "--constructor",
            "linear",
            "--out",
            s(&out)
        ]),
        1
    );
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("absent.csv");
    let out = dir.path().join("out");
    assert_eq!(run(&["run", "--input", s(&input), "--method", "ACI", "--alpha", "0.9", "--out", s(&out)]), 2);
}

#[test]
fn run_then_plotdata() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), 120, false);
    let out = dir.path().join("run");
    for method in ["ACI", "AgACI", "FACI", "SF-OGD", "SAOCP"] {
        let code = run(&[
            "run",
            "--input",
            s(&input),
            "--method",
            method,
            "--alpha",
            "0.8",
            "--calibrate-D",
            "1:20",
            "--out",
            s(&out),
        ]);
        assert_eq!(code, 0, "{method}");
        let records = read_intervals(&out.join("intervals.csv")).unwrap();
        assert_eq!(records.len(), 120);
        for r in &records {
            if r.lower.is_finite() && r.upper.is_finite() {
                assert!((r.width - (r.upper - r.lower)).abs() < 1e-12);
            }
            assert_eq!(r.covered == 1, r.lower <= r.y && r.y <= r.upper);
        }
        let metrics: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
        assert!(metrics["empirical_coverage"].is_number());
        assert!(metrics["D"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(run(&["plotdata", "--run-dir", s(&out)]), 0);
    let text = std::fs::read_to_string(out.join("plotdata.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 120);
    assert_eq!(run(&["plotdata", "--run-dir", s(&dir.path().join("nope"))]), 1);
}

#[test]
fn calibrated_d_is_reported() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), 60, false);
    let out = dir.path().join("run");
    let code = run(&[
        "run",
        "--input",
        s(&input),
        "--method",
        "SAOCP",
        "--alpha",
        "0.9",
        "--calibrate-D",
        "1:10",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&input).unwrap();
    let d = text
        .lines()
        .skip(1)
        .take(10)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[1] - v[2]).abs()
        })
        .fold(0.0, f64::max);
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["D"].as_f64().unwrap(), d);
}

#[test]
fn zero_gamma_freezes_theta() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), 40, false);
    let out = dir.path().join("run");
    let code = run(&[
        "run",
        "--input",
        s(&input),
        "--method",
        "ACI",
        "--alpha",
        "0.9",
        "--constructor",
        "linear",
        "--gamma",
        "0",
        "--theta1",
        "0.3",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    let records = read_intervals(&out.join("intervals.csv")).unwrap();
    assert!(records.iter().all(|r| r.theta == Some(0.3)));
}

#[test]
fn log_transform_gives_positive_bounds() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), 80, true);
    let out = dir.path().join("run");
    let code =
        run(&["run", "--input", s(&input), "--method", "FACI", "--alpha", "0.8", "--log-transform", "--out", s(&out)]);
    assert_eq!(code, 0);
    let records = read_intervals(&out.join("intervals.csv")).unwrap();
    assert!(records.iter().all(|r| r.lower >= 0.0 && r.upper >= r.lower));
}

#[test]
fn bench_writes_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    let code = run(&["bench", "--study", "arma", "--seeds", "2", "--params", "0.1", "--out", s(&out)]);
    assert_eq!(code, 0);
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    // 4 methods x 2 seeds.
    assert_eq!(runs.lines().count(), 1 + 8);
    assert!(out.join("aggregate.csv").exists());
}
