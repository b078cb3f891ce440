use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coupled(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupled")).args(args).env_remove("COUPLED_SEED").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = coupled(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

#[test]
fn entropy_table_rows_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    ok(&["entropy-table", "--kappa-min", "0", "--kappa-max", "5", "--steps", "51", "--sigma", "2", "--out", out.to_str().unwrap()]);
    let r = rows(&out);
    assert_eq!(r.len(), 51);
    let bgs = 1.0 + 2f64.ln();
    for i in 1..=4 {
        assert!((num(&r[0], i) - bgs).abs() <= 1e-12);
    }
    ok(&["entropy-table", "--kappa-min", "0", "--kappa-max", "100", "--steps", "3", "--sigma", "2", "--out", out.to_str().unwrap()]);
    let last = rows(&out).pop().unwrap();
    assert_eq!(num(&last, 0), 100.0);
    assert!((num(&last, 4) - 2.0).abs() <= 0.01 && (num(&last, 8) - 2.0).abs() <= 0.01);
    assert!((num(&last, 2) - 1.0).abs() <= 0.01 && (num(&last, 6) - 1.0).abs() <= 0.01);
    let manifest = json(&dir.path().join("t.csv.manifest.json"));
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["command"], "entropy-table");
}

fn scaled_columns(path: &Path, scale: f64) -> Vec<f64> {
    rows(path).iter().filter(|r| num(r, 2) == scale).map(|r| num(r, 6)).collect()
}

#[test]
fn scale_family_collapse_and_q_exponential_gap() {
    let dir = tempfile::tempdir().unwrap();
    let gpd = dir.path().join("gpd.csv");
    let qexp = dir.path().join("qexp.csv");
    let run = |family: &str, kappa: &str, out: &Path| {
        ok(&["scale-family", "--family", family, "--scales", "0.5,1,2", "--kappa", kappa, "--out", out.to_str().unwrap()])
    };
    run("gpd", "1", &gpd);
    let reference = scaled_columns(&gpd, 1.0);
    for s in [0.5, 2.0] {
        for (a, b) in scaled_columns(&gpd, s).iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    run("qexp", "1", &qexp);
    let gap = scaled_columns(&qexp, 1.0).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 0.01, "gap {gap}");
    run("gpd", "0", &gpd);
    run("qexp", "0", &qexp);
    let strip = |p: &Path| String::from_utf8(std::fs::read(p).unwrap()).unwrap().replace("qexp,", "gpd,");
    assert_eq!(strip(&gpd), strip(&qexp));
}

#[test]
fn sde_run_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sde.csv");
    ok(&["sde-run", "--out", out.to_str().unwrap()]);
    let report = json(&dir.path().join("sde.json"));
    assert_eq!(report["schema"], 1);
    let slope = report["slope_fit"]["slope"].as_f64().unwrap();
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
    assert_eq!(rows(&out).len(), 100);

    ok(&["sde-run", "--m", "0", "--steps", "200000", "--paths", "2", "--out", out.to_str().unwrap()]);
    let report = json(&dir.path().join("sde.json"));
    assert_eq!(report["kappa_theory"], 0.0);
    assert!(report["slope_fit"].is_null());
}

#[test]
fn maxent_verify_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    for (kappa, trials) in [("0.5", "500"), ("0", "100")] {
        ok(&["maxent-verify", "--sigma", "1", "--kappa", kappa, "--trials", trials, "--seed", "7", "--out", out.to_str().unwrap()]);
        let r = json(&out);
        assert_eq!(r["violations"], 0, "kappa {kappa}");
        if let Some(res) = r["stationarity_residual"].as_f64() {
            assert!(res <= 1e-6);
        }
    }
}

#[test]
fn eval_examples() {
    assert_eq!(ok(&["eval", "density", "--family", "gpd", "--mu", "0", "--sigma", "1", "--kappa", "1", "--x", "0"]), "1.00000000000\n");
    assert_eq!(ok(&["eval", "coupled-entropy", "--family", "gpd", "--sigma", "1", "--kappa", "1"]), "1.00000000000\n");
    assert_eq!(ok(&["eval", "q-of", "--kappa", "1", "--alpha", "1", "--dim", "1"]), "1.50000000000\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let code = |args: &[&str]| coupled(args).status.code().unwrap();
    assert_eq!(code(&["eval", "density"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["entropy-table", "--kappa-min", "3", "--kappa-max", "1", "--out", out.to_str().unwrap()]), 2);
    assert_eq!(code(&["entropy-table", "--out", dir.path().join("missing/x.csv").to_str().unwrap()]), 2);
    assert_eq!(code(&["sde-run", "--dt", "0.2", "--out", out.to_str().unwrap()]), 3);
    let usage = coupled(&["eval", "density"]);
    assert!(String::from_utf8_lossy(&usage.stderr).contains("Usage"));
}

#[test]
fn seed_comes_from_environment_unless_given() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_coupled"));
        cmd.args(["maxent-verify", "--trials", "5", "--out", out.to_str().unwrap()]).env_remove("COUPLED_SEED");
        if let Some(s) = env {
            cmd.env("COUPLED_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.status().unwrap().success());
        json(&dir.path().join(format!("{name}.manifest.json")))["seed"].as_u64().unwrap()
    };
    assert_eq!(run("a.json", None, None), 42);
    assert_eq!(run("b.json", Some("9"), None), 9);
    assert_eq!(run("c.json", Some("9"), Some("3")), 3);
}
