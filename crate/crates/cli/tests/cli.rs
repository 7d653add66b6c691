use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_invdens"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("invdens-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kernel_check_prints_moment_table() {
    let text = ok(bin().args(["kernel-check", "--order", "4"]).output().unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("l,moment"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert!((rows[0].1 - 1.0).abs() < 1e-10);
    assert!(rows[1..].iter().all(|(_, m)| m.abs() < 1e-10));
}

#[test]
fn simulate_then_estimate() {
    let dir = scratch("sim");
    let obs = dir.join("obs.csv");
    ok(bin()
        .args(["simulate", "--schedule", "sync", "--d", "2", "--n", "400", "--delta", "0.1", "--seed", "3", "--out", s(&obs)])
        .output()
        .unwrap());
    let head = std::fs::read_to_string(&obs).unwrap();
    assert!(head.starts_with("time,x1,x2\n"));
    assert_eq!(head.lines().count(), 401);
    let est = |mode: &str| {
        json(&ok(bin()
            .args(["estimate", "--input", s(&obs), "--point", "0,0", "--bandwidth", "0.4,0.4", "--order", "2", "--mode", mode])
            .output()
            .unwrap()))
    };
    let a = est("sync");
    let b = est("async");
    assert_eq!(a["estimate"], b["estimate"]);
    assert!((a["delta_n"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(a["delta_prime_n"].as_f64().unwrap(), 0.0);
}

#[test]
fn asynchronous_schedules_and_fine_paths() {
    let dir = scratch("async");
    let obs = dir.join("obs.csv");
    let path = dir.join("path.csv");
    let sched = dir.join("schedule.json");
    ok(bin()
        .args([
            "simulate", "--schedule", "jitter", "--fraction", "0.3", "--d", "3", "--n", "100", "--T", "20", "--fine-dt", "0.02",
            "--out", s(&obs), "--path-out", s(&path), "--schedule-out", s(&sched),
        ])
        .output()
        .unwrap());
    let schedule = json(&std::fs::read_to_string(&sched).unwrap());
    assert_eq!(schedule["T"].as_f64(), Some(20.0));
    assert_eq!(schedule["grids"].as_array().unwrap().len(), 3);
    let run = |mode: &str, extra: &[&str]| {
        let mut args = vec!["estimate", "--point", "0,0,0", "--bandwidth", "0.5,0.5,0.5", "--mode", mode, "--T", "20"];
        args.extend_from_slice(extra);
        json(&ok(bin().args(&args).output().unwrap()))
    };
    let a = run("async", &["--input", s(&obs)]);
    assert!(a["delta_prime_n"].as_f64().unwrap() > 0.0);
    let c = run("continuous", &["--path", s(&path)]);
    assert!(c["estimate"].as_f64().unwrap().is_finite());
    let h = run("hybrid", &["--input", s(&obs), "--path", s(&path)]);
    assert!(h["estimate"].as_f64().unwrap().is_finite());
    let sync = bin()
        .args(["estimate", "--input", s(&obs), "--point", "0,0,0", "--bandwidth", "0.5,0.5,0.5", "--mode", "sync"])
        .output()
        .unwrap();
    assert!(!sync.status.success());
}

#[test]
fn rate_check_reports_verdict() {
    let v = json(&ok(bin()
        .args(["rate-check", "--beta", "2,2,2", "--d", "3", "--T", "1e4", "--n", "1e6", "--delta", "0.01", "--sync"])
        .output()
        .unwrap()));
    assert_eq!(v["verdict"], "continuous-rate");
    let thr = v["thresholds"][0]["threshold"].as_f64().unwrap();
    assert!((thr - 0.025_118_864_315_095_8).abs() < 1e-15);
    assert_eq!(v["exponents"]["continuous"]["exponent"].as_f64(), Some(0.8));
    let v = json(&ok(bin()
        .args(["rate-check", "--beta", "1,2,3", "--d", "3", "--T", "1e4", "--n", "1e5", "--delta", "1e-3", "--delta-prime", "1e-4"])
        .output()
        .unwrap()));
    assert!(v["thresholds"].as_array().unwrap().len() == 4);
    assert!(v["bandwidths"]["continuous"].as_array().unwrap().len() == 3);
    let bad = bin().args(["rate-check", "--beta", "2,1,3", "--T", "1e4", "--n", "10", "--delta", "0.1"]).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn experiment_writes_outputs() {
    let dir = scratch("exp");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{
            "model": {"id": "ou", "theta": [1, 1, 1], "sigma": [1.4142135623730951, 1.4142135623730951, 1.4142135623730951]},
            "smoothness": {"beta": [2, 2, 2]},
            "kernel_order": 2,
            "bandwidth": {"rule": "intermediate"},
            "sweep": [{"n": 500, "delta": 0.3}, {"n": 1000, "delta": 0.3}, {"n": 2000, "delta": 0.3}],
            "replications": 16,
            "seed": 4
        }"#,
    )
    .unwrap();
    let (out, summary, plot) = (dir.join("results.csv"), dir.join("summary.json"), dir.join("results.svg"));
    let run = |workers: &str| {
        ok(bin()
            .args(["experiment", "--config", s(&cfg), "--out", s(&out), "--summary", s(&summary), "--plot", s(&plot), "--workers", workers])
            .output()
            .unwrap());
        std::fs::read_to_string(&out).unwrap()
    };
    let csv = run("1");
    assert_eq!(csv.lines().next(), Some("scale,delta_n,delta_prime_n,mse,bias_sq,variance,stderr,regime,theory_exponent"));
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(run("2"), csv);
    let sm = json(&std::fs::read_to_string(&summary).unwrap());
    assert!(sm["fitted_slope"].as_f64().is_some());
    assert!(sm["theoretical_exponent"].as_f64().is_some());
    assert!(sm["summary"]["rules"].as_array().unwrap().iter().any(|r| r["name"] == "mse_decomposition"));
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("<svg"));
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = scratch("bad");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"model": {"id": "ou", "theta": [1], "sigma": [1]}}"#).unwrap();
    let out = bin()
        .args(["experiment", "--config", s(&cfg), "--out", s(&dir.join("r.csv")), "--summary", s(&dir.join("s.json"))])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
