use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specfloor"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const EXPONENTIAL: &str = r#"
[model]
d = 1
[[model.components]]
kind = "exponential"

[design]
kind = "grid"
d = 1
counts = [30]
spacing = 1.0
"#;

#[test]
fn counterexample_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["counterexample", "--n-list", "4,64", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("counterexample.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,lambda1_closed_form,lambda1_numeric,abs_diff"));
    for (line, n) in lines.zip([4.0, 64.0]) {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(f[0], n);
        assert!((f[1] - (1.0 + (n * PI / (n + 1.0)).cos())).abs() < 1e-15);
        assert!((f[2] - f[1]).abs() < 1e-10);
    }
}

#[test]
fn triangular_certification_fails_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = shipped("triangular_half_grid.toml");
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["bound"].is_null());
    let reason = report["failure_reason"].as_str().unwrap();
    assert!(reason.starts_with("spectral positivity: floor"), "{reason}");
    let argmin = reason.rsplit("f≈[").next().unwrap().trim_end_matches(']').parse::<f64>().unwrap();
    let k = (argmin.abs() / (2.0 * PI)).round();
    assert!(k >= 1.0 && (argmin.abs() - 2.0 * PI * k).abs() < 1e-2);
    assert!(tmp.path().join("certify.json").exists());
}

#[test]
fn sweep_bound_is_constant_and_below_lambda1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = shipped("exponential_grid.toml");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--n-list",
        "25,100,400",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,N,lambda1,bound"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[3], rows[0][3]);
        assert!(r[2] >= r[3]);
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = shipped("lmc_2d_random.toml");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ja = std::fs::read(a.join("certify.json")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("certify.json")).unwrap());
    let report: Value = serde_json::from_slice(&ja).unwrap();
    let bound = report["bound"]["value"].as_f64().unwrap();
    assert!(bound > 0.0 && bound <= report["lambda1"].as_f64().unwrap());
    assert!(report["margin"].as_f64().unwrap() >= -1e-10);
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{EXPONENTIAL}\n[taper]\nkind = \"ones\"\ntaperr = 2\n"));
    let o = run(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("taperr"));

    let cfg = write_config(tmp.path(), &EXPONENTIAL.replacen("d = 1", "d = 2", 1));
    let o = run(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension mismatch"));

    assert_eq!(run(&["certify"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn audit_spectrum_and_taper_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = write_config(tmp.path(), &format!("{EXPONENTIAL}\n[taper]\nkind = \"wendland\"\nrange = 3.0\n"));
    let cfg = cfg.to_str().unwrap();

    let o = run(&["audit", "--config", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let a: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(a["pass"], Value::Bool(true));
    assert_eq!(a["assumptions"]["inversion"]["pass"], Value::Bool(true));
    assert_eq!(a["assumptions"]["min_distance"]["overall"].as_f64(), Some(1.0));

    let o = run(&["spectrum", "--config", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s["lambda1"].as_f64().unwrap() > 0.0);

    let o = run(&["taper", "--config", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(t["slack"].as_f64().unwrap() >= -1e-10);
}

#[test]
fn dump_matrix_and_thread_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EXPONENTIAL);
    let o = bin()
        .env("SPECFLOOR_THREADS", "1")
        .args(["certify", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "--dump-matrix"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("sigma.csv")).unwrap();
    assert_eq!(csv.lines().count(), 30);
    let first: Vec<f64> = csv.lines().next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first.len(), 30);
    assert_eq!(first[0], 1.0);
    assert!((first[1] - (-1.0f64).exp()).abs() < 1e-16);
}

#[test]
fn file_design_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let design = specfloor::designs::make_random_min_dist(1, &[40], 0.8, &[(0.0, 60.0)], 4).unwrap();
    std::fs::write(tmp.path().join("design.csv"), design.to_table()).unwrap();
    let body = EXPONENTIAL.replace(
        "kind = \"grid\"\nd = 1\ncounts = [30]\nspacing = 1.0",
        "kind = \"file\"\nd = 1\npath = \"design.csv\"",
    );
    let cfg = write_config(tmp.path(), &body);
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["n_total"].as_u64(), Some(40));
}
