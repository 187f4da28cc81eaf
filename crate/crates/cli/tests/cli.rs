use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn halfspace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace"))
        .current_dir(dir)
        .env_remove("AGNOSTIC_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn without_timings(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

fn w_star(meta: &Path) -> String {
    let v: Value = serde_json::from_str(&fs::read_to_string(meta).unwrap()).unwrap();
    v["model"]["w_star"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[test]
fn generate_writes_csv() {
    let dir = TempDir::new().unwrap();
    let o = halfspace(dir.path(), &["generate", "--d", "2", "--n", "1000", "--model", "rcn:0.1", "--seed", "7", "--out", "data.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,2,n,1000,mode,halfspace");
    assert_eq!(lines.count(), 1000);
}

#[test]
fn learn_halfspace_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(&halfspace(p, &["generate", "--d", "2", "--n", "5000", "--model", "rcn:0.1", "--seed", "7", "--out", "data.csv"])), 0);
    for out in ["a.json", "b.json"] {
        let o = halfspace(p, &["learn-halfspace", "--data", "data.csv", "--eps", "0.2", "--seed", "7", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = without_timings(&p.join("a.json"));
    assert_eq!(a, without_timings(&p.join("b.json")));
    assert_eq!(a["algorithm"], "learn-halfspace");
    assert_eq!(a["schema_version"], 1);
}

#[test]
fn test_set_truth_and_oracle_fill_the_report() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let gen = ["generate", "--d", "2", "--n", "20000", "--model", "rcn:0.1", "--seed", "3", "--out", "train.csv", "--meta", "meta.json"];
    assert_eq!(code(&halfspace(p, &gen)), 0);
    let w = w_star(&p.join("meta.json"));
    let o = halfspace(p, &["generate", "--d", "2", "--n", "20000", "--model", "rcn:0.1", "--seed", "4", "--w-star", &w, "--out", "test.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = halfspace(
        p,
        &["learn-halfspace", "--data", "train.csv", "--test", "test.csv", "--truth", "meta.json", "--oracle-resolution", "0.02", "--out", "run.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = without_timings(&p.join("run.json"));
    let test = r["errors"]["test"].as_f64().unwrap();
    let oracle = r["errors"]["oracle_opt"].as_f64().unwrap();
    assert_eq!(r["errors"]["population_opt"]["kind"], "exact");
    assert!(test <= 0.1 + 0.07, "{test}");
    assert!((test - oracle).abs() <= 0.05, "{test} vs {oracle}");
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_halfspace"))
        .current_dir(dir.path())
        .env("AGNOSTIC_OUTPUT_DIR", &out)
        .args(["generate", "--d", "1", "--n", "10"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("data.csv").exists());
}

#[test]
fn verify_suites_pass() {
    let dir = TempDir::new().unwrap();
    for suite in ["hermite", "cover", "relu", "all"] {
        let o = halfspace(dir.path(), &["verify", "--suite", suite]);
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    }
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(&halfspace(p, &["generate", "--d", "2", "--n", "500", "--out", "data.csv"])), 0);

    let o = halfspace(p, &["learn-halfspace", "--data", "data.csv", "--eps", "1.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("eps"));

    fs::write(p.join("bad.json"), r#"{"eps": 0.2, "degre": 3}"#).unwrap();
    let o = halfspace(p, &["learn-halfspace", "--data", "data.csv", "--config", "bad.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("degre"));

    let o = halfspace(p, &["learn-halfspace", "--data", "data.csv", "--no-such-flag"]);
    assert_eq!(code(&o), 2);

    let o = halfspace(p, &["generate", "--d", "2", "--n", "10", "--model", "rcn:0.9"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("noise"));

    let o = halfspace(p, &["learn-relu", "--data", "data.csv"]);
    assert_eq!(code(&o), 2);

    let o = halfspace(p, &["learn-halfspace", "--data", "missing.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_round_trips_through_print_config() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    for (cmd, flags) in [
        ("learn-halfspace", vec!["--eps", "0.3", "--degree", "2", "--search", "brute-force"]),
        ("ptas", vec!["--gamma", "0.4", "--inner-degree", "3", "--inner-eta", "0.05"]),
        ("learn-relu", vec!["--eps", "0.3", "--degree", "3"]),
    ] {
        let mut args = vec![cmd, "--data", "unused.csv", "--print-config"];
        args.extend(flags);
        let o = halfspace(p, &args);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
        let first: Value = serde_json::from_slice(&o.stdout).unwrap();
        fs::write(p.join("cfg.json"), &o.stdout).unwrap();
        let o = halfspace(p, &[cmd, "--data", "unused.csv", "--print-config", "--config", "cfg.json"]);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
        let second: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(first, second, "{cmd}");
    }
}

#[test]
fn ptas_exit_code_reflects_validation() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let gen = ["generate", "--d", "3", "--n", "100000", "--model", "band:0.0627", "--seed", "5", "--out", "train.csv", "--meta", "meta.json"];
    assert_eq!(code(&halfspace(p, &gen)), 0);
    let o = halfspace(p, &["ptas", "--data", "train.csv", "--inner-degree", "3", "--inner-eta", "0.05", "--truth", "meta.json", "--out", "ptas.json"]);
    let r = without_timings(&p.join("ptas.json"));
    let passed = r["localization"]["validation"]["passed"].as_bool();
    let flagged = r["flags"].as_array().unwrap().iter().any(|f| f == "validation_failed");
    assert_eq!(code(&o), if flagged { 1 } else { 0 }, "{}", stderr(&o));
    assert_eq!(passed, Some(!flagged));
    assert_eq!(r["errors"]["population_opt"]["kind"], "upper_bound");
}

#[test]
fn learn_relu_runs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let o = halfspace(p, &["generate", "--d", "3", "--n", "50000", "--kind", "relu", "--seed", "2", "--out", "relu.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = halfspace(p, &["learn-relu", "--data", "relu.csv", "--out", "relu.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = without_timings(&p.join("relu.json"));
    assert!(r["errors"]["holdout"].as_f64().unwrap() <= 0.01);
    assert!(r["hypothesis"]["a"].as_f64().unwrap() > 0.0);
}

fn read_sweep(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let o = halfspace(dir.path(), &["sweep", "--param", "degree", "--values", "", "--out", "s.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("param,value,seed"));
}

#[test]
fn sweep_cap_exceeded_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = halfspace(dir.path(), &["sweep", "--param", "noise", "--values", "0,0.1", "--seeds", "501"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn degree_sweep_is_monotone_within_noise() {
    let dir = TempDir::new().unwrap();
    let o = halfspace(dir.path(), &["sweep", "--param", "degree", "--values", "1,2,3,4", "--seed", "11", "--out", "deg.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_sweep(&dir.path().join("deg.csv"));
    let col = header.iter().position(|h| h == "test_error").unwrap();
    let seed_col = header.iter().position(|h| h == "seed").unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    assert_eq!(errs.len(), 4);
    assert!(rows.iter().all(|r| r[seed_col] == "11"));
    assert!(errs.windows(2).all(|w| w[1] <= w[0] + 0.01), "{errs:?}");
}

#[test]
fn noise_sweep_tracks_rate() {
    let dir = TempDir::new().unwrap();
    let o = halfspace(dir.path(), &["sweep", "--param", "noise", "--values", "0,0.05,0.1,0.2", "--d", "3", "--out", "noise.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_sweep(&dir.path().join("noise.csv"));
    let v = header.iter().position(|h| h == "value").unwrap();
    let t = header.iter().position(|h| h == "test_error").unwrap();
    for r in &rows {
        let rate: f64 = r[v].parse().unwrap();
        let err: f64 = r[t].parse().unwrap();
        assert!(err <= rate + 0.07, "rate {rate}: {err}");
    }
}
