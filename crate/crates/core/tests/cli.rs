use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_gchord");

struct Case {
    dir: tempfile::TempDir,
}

impl Case {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Writes a config whose outputs land in the temp dir.
    fn config(&self, mut cfg: Value) -> PathBuf {
        cfg["outputs"] = json!({
            "series_path": self.path("series.csv"),
            "summary_path": self.path("summary.json"),
            "report_path": self.path("report.json"),
        });
        let path = self.path("config.json");
        fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        path
    }

    fn run(&self, cmd: &str, config: &Path, extra: &[&str]) -> (i32, String) {
        let out = Command::new(BIN).arg(cmd).arg("--config").arg(config).args(extra).output().unwrap();
        (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn base(init: Value, f: Value) -> Value {
    json!({ "p": 1, "q": 3, "grid_N": 256, "f": f, "init": init })
}

fn unit_disk() -> Value {
    json!({"kind": "disk", "params": {"radius": 1.0}})
}

fn one() -> Value {
    json!({"kind": "constant", "c0": 1.0})
}

#[test]
fn solve_stationary_disk_then_verify_round_trip() {
    let case = Case::new();
    let cfg = case.config(base(unit_disk(), one()));
    let (code, err) = case.run("solve", &cfg, &[]);
    assert_eq!(code, 0, "{err}");

    let summary = case.json("summary.json");
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["steps"], 0);
    assert!((summary["tau"].as_f64().unwrap() - 0.3334).abs() < 1e-4);
    let residual = summary["residual_sup"].as_f64().unwrap();
    assert!(residual <= 1e-6);

    let csv = fs::read_to_string(case.path("series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,t,dt,theta,I_gamma_q,Phi,residual_sup,h_min,h_max,K_min,K_max"));
    assert_eq!(lines.count(), 1);

    let summary_path = case.path("summary.json");
    let (code, err) = case.run("verify", &cfg, &["--h-file", summary_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = case.json("report.json");
    assert!((report["residual_sup"].as_f64().unwrap() - residual).abs() <= 1e-9);
    assert_eq!(report["tau_source"], "theta");
}

#[test]
fn short_solve_is_deterministic_and_rows_increase() {
    let case = Case::new();
    let mut cfg = base(json!({"kind": "fourier", "params": {"coeffs": [0.05]}}), one());
    cfg["flow"] = json!({"max_steps": 30, "record_every": 7});
    let cfg = case.config(cfg);
    let (code, _) = case.run("solve", &cfg, &[]);
    assert_eq!(code, 2, "max_steps exhausted means non-convergence");
    let first = fs::read(case.path("series.csv")).unwrap();
    let summary = fs::read(case.path("summary.json")).unwrap();
    case.run("solve", &cfg, &[]);
    assert_eq!(first, fs::read(case.path("series.csv")).unwrap());
    assert_eq!(summary, fs::read(case.path("summary.json")).unwrap());

    let steps: Vec<usize> = String::from_utf8(first)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(steps, vec![0, 7, 14, 21, 28, 30]);
}

#[test]
fn step_floor_above_stability_cap_underflows() {
    let case = Case::new();
    let mut cfg = base(json!({"kind": "fourier", "params": {"coeffs": [0.05]}}), one());
    cfg["flow"] = json!({"dt0": 1e-3, "dt_min": 5e-4});
    let (code, _) = case.run("solve", &case.config(cfg), &[]);
    assert_eq!(code, 3);
    assert_eq!(case.json("summary.json")["status"], "step_size_underflow");
}

#[test]
fn config_errors_exit_one() {
    let case = Case::new();
    let crossing = json!({"kind": "fourier", "c0": 0.5, "even_harmonics": [[1, 1.0]]});
    let (code, err) = case.run("solve", &case.config(base(unit_disk(), crossing)), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("not positive"), "{err}");

    let path = case.path("broken.json");
    fs::write(&path, "{\n  \"p\": 1,\n  \"q\": \"three\"\n}").unwrap();
    let (code, err) = case.run("solve", &path, &[]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn verify_reports_shape_mismatch_and_non_solutions() {
    let case = Case::new();
    let mut cfg = base(unit_disk(), one());
    cfg["verify"] = json!({"tau": 1.0});
    let cfg = case.config(cfg);

    let short = case.path("short.json");
    fs::write(&short, "[1.0, 1.0, 1.0]").unwrap();
    let (code, err) = case.run("verify", &cfg, &["--h-file", short.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("does not match grid size 256"), "{err}");

    let ellipse: Vec<f64> = (0..256)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 256.0;
            (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt()
        })
        .collect();
    let stored = case.path("ellipse.json");
    fs::write(&stored, serde_json::to_string(&ellipse).unwrap()).unwrap();
    let (code, err) = case.run("verify", &cfg, &["--h-file", stored.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = case.json("report.json");
    assert_eq!(report["tau"], 1.0);
    assert!(report["residual_sup"].as_f64().unwrap() > 0.1);
    assert!(report["extremum"]["max_gap"].as_f64().unwrap() < 1e-3);
}

#[test]
fn oracle_reports_both_branches() {
    let case = Case::new();
    let (code, err) = case.run("oracle", &case.config(base(unit_disk(), one())), &[]);
    assert_eq!(code, 0, "{err}");
    let r = case.json("report.json");
    assert!(r["q3_identity_rel_err"].as_f64().unwrap() <= 1e-3);
    assert!(r["rel_diff"].as_f64().unwrap() <= 1e-2);

    let mut cfg = base(unit_disk(), one());
    cfg["q"] = json!(2.5);
    let (code, _) = case.run("oracle", &case.config(cfg), &[]);
    assert_eq!(code, 0);
    let r = case.json("report.json");
    assert!(r["I_oracle"].is_null());
    assert!(r["I_polar"].as_f64().unwrap() > 0.0);
    assert!(r["q3_identity_rel_err"].is_null());
}

#[test]
fn variation_dilation_and_guard() {
    let g_area = 2.0 * std::f64::consts::PI * (1.0 - (-0.5f64).exp());
    let exact = 2.0 * g_area * 2.0 * std::f64::consts::PI * (-0.5f64).exp();
    let case = Case::new();
    let mut cfg = base(unit_disk(), one());
    cfg["variation"] = json!({"p_values": [1.0, 0.0]});
    let (code, err) = case.run("variation", &case.config(cfg), &[]);
    assert_eq!(code, 0, "{err}");
    let rows = case.json("report.json")["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fd = row["fd_derivative"].as_f64().unwrap();
        assert!((fd / exact - 1.0).abs() < 1e-3, "{row}");
        assert_eq!(row["body"], "disk(1)");
    }

    let mut cfg = base(unit_disk(), one());
    cfg["variation"] = json!({
        "t_step": 0.9,
        "g": {"kind": "fourier", "c0": 1.0, "even_harmonics": [[3, 0.9]]}
    });
    let (code, err) = case.run("variation", &case.config(cfg), &[]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("t = "), "{err}");
}
