use std::path::Path;
use std::process::{Command, Output};

use cylcover_cli::sweep::{read_csv, summarize, summary_json};
use cylcover_cli::{ExperimentConfig, Model};
use serde_json::Value;

fn cylcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylcover")).args(args).output().expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn theory_two() {
    let v = json_out(&cylcover(&["theory", "--d", "2"]));
    let c = v["c_star"].as_f64().unwrap();
    assert!((c - 3.5644280).abs() < 1e-6);
    assert_eq!(v["limit"].as_f64().unwrap(), c);
    assert_eq!(v["kappa_d_minus_1"].as_f64().unwrap(), 2.0);
    assert_eq!(v["kappa_d"].as_f64().unwrap(), std::f64::consts::PI);
}

#[test]
fn theory_three_limit_is_square_root() {
    let v = json_out(&cylcover(&["theory", "--d", "3"]));
    let c = v["c_star"].as_f64().unwrap();
    assert!((v["limit"].as_f64().unwrap() - c.sqrt()).abs() < 1e-15);
    assert_eq!(v["corner_confirmed"], Value::Bool(true));
}

#[test]
fn theory_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = cylcover(&["theory", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), o.stdout);
}

#[test]
fn condition_reports() {
    let v = json_out(&cylcover(&["condition", "--d", "2", "--samples", "200000", "--seed", "4"]));
    let want = 0.5f64.atan() / std::f64::consts::PI;
    for cone in v["cones"].as_array().unwrap() {
        let (p, s) = (cone["estimate"].as_f64().unwrap(), cone["std_error"].as_f64().unwrap());
        assert!((p - want).abs() <= 3.0 * s, "{p} vs {want}");
    }
    assert_eq!(v["violation"], Value::Bool(false));

    let v = json_out(&cylcover(&["condition", "--d", "3", "--law", "fixed:0,0,1", "--samples", "1000"]));
    let cones = v["cones"].as_array().unwrap();
    assert_eq!(cones.len(), 4);
    assert!(cones.iter().all(|c| c["estimate"].as_f64() == Some(1.0)));

    let v = json_out(&cylcover(&["condition", "--d", "3", "--samples", "200000", "--seed", "5"]));
    let rows: Vec<(f64, f64)> = v["cones"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["estimate"].as_f64().unwrap(), c["std_error"].as_f64().unwrap()))
        .collect();
    for a in &rows {
        for b in &rows {
            assert!((a.0 - b.0).abs() <= 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt(), "{rows:?}");
        }
    }

    let v = json_out(&cylcover(&["condition", "--d", "2", "--law", "fixed:0.6,0.8", "--samples", "100"]));
    assert_eq!(v["violation"], Value::Bool(true));
}

#[test]
fn verify_rejects_bad_intensity() {
    let o = cylcover(&["verify", "--rho", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.cfg", "rho = 0\n");
    assert_eq!(cylcover(&["--config", &cfg, "verify"]).status.code(), Some(2));
}

#[test]
fn verify_small_run_with_zero_radius() {
    let v = json_out(&cylcover(&["verify", "--rho", "1000", "--c", "0", "--reps", "5"]));
    let vol = &v["checks"][2];
    assert_eq!(vol["check"], "uncovered_volume");
    assert_eq!(vol["passed"], Value::Bool(true));
    assert_eq!(vol["details"]["mean"].as_f64(), Some(0.5));
}

const SWEEP: &str = "\
d = 2
model = lines-ball
rho_list = 100, 1000
replications = 6
tol = 1e-6
master_seed = 21
";

#[test]
fn sweep_structure_and_summary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", SWEEP);
    let csv = dir.path().join("s.csv");
    let o = cylcover(&["--config", &cfg, "--out", csv.to_str().unwrap(), "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("rho,replication_index,radius_lower,radius_upper,normalized,ray_or_path_count,wall_time_seconds\n"));
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 12);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r.rho, if k < 6 { 100.0 } else { 1000.0 });
        assert_eq!(r.replication_index, k % 6);
        assert!(r.radius_lower <= r.radius_upper && r.radius_upper - r.radius_lower <= 1e-6);
        assert!(r.normalized > 0.0);
    }

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary, summary_json(&summarize(&rows)));
    let keys: Vec<&String> = summary.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["100", "1000"]);
    // Median of six values recomputed from the file.
    let mut v: Vec<f64> = rows[..6].iter().map(|r| r.normalized).collect();
    v.sort_by(f64::total_cmp);
    assert_eq!(summary["100"]["median"].as_f64().unwrap(), 0.5 * (v[2] + v[3]));
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", SWEEP);
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = cylcover(&["--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap(), "sweep"]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("21", "a.csv"), run("21", "b.csv"));
    assert_ne!(run("21", "a.csv"), run("22", "c.csv"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", &format!("{SWEEP}output_path = x.csv\nreplicatons = 3\n"));
    let o = cylcover(&["--config", &cfg, "sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicatons"));
}

#[test]
fn sweep_needs_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", SWEEP);
    assert_eq!(cylcover(&["--config", &cfg, "sweep"]).status.code(), Some(2));
}

#[test]
fn disk_radius_dominates_ball_radius_rowwise() {
    let dir = tempfile::tempdir().unwrap();
    let base = format!("{SWEEP}output_path = {}\n", dir.path().join("ball.csv").display());
    let ball = ExperimentConfig::parse(&base).unwrap();
    let disk = ExperimentConfig { model: Model::LinesDisk, output_path: dir.path().join("disk.csv"), ..ball.clone() };
    let opts = cylcover_cli::SweepOptions::default();
    let a = cylcover_cli::run_sweep(&ball, opts).unwrap();
    let b = cylcover_cli::run_sweep(&disk, opts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.ray_or_path_count, y.ray_or_path_count);
        assert!(y.radius_upper + 2.0 * ball.tol >= x.radius_upper, "{x:?} {y:?}");
    }
}

#[test]
fn brownian_sweep_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "d = 2\nmodel = brownian\nn_steps = 64\nrho_list = 20, 40\nreplications = 2\ntol = 1e-5\nmaster_seed = 1\noutput_path = {}\n",
        dir.path().join("b.csv").display()
    );
    let cfg = write_config(dir.path(), "b.cfg", &text);
    let o = cylcover(&["--config", &cfg, "--threads", "2", "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("b.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.normalized > 0.0 && r.radius_upper - r.radius_lower <= 1e-5));
}
