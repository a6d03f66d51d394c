use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psym_core::formats::{self, parse_csv, read_checkpoint, MetricMeta};
use psym_core::network::GradientNet;
use tempfile::TempDir;

fn psym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psym"))
        .args(args)
        .current_dir(dir)
        .env_remove("PSYM_SEED")
        .output()
        .expect("psym runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = psym(dir, args);
    assert!(
        out.status.success(),
        "psym {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    parse_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

fn slope(stdout: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("slope "))
        .expect("slope line")
        .trim()
        .parse()
        .unwrap()
}

fn pendulum_data(dir: &Path) -> PathBuf {
    ok(dir, &["gen-data", "--system", "pendulum", "--n", "15", "--seed", "3", "--out", "d.csv"]);
    dir.join("d.csv")
}

#[test]
fn gen_data_writes_requested_rows() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen-data", "--system", "pendulum", "--n", "15", "--T", "0.01", "--h-gen", "0.01", "--seed", "7"]);
    let csv = tmp.path().join("pendulum_n15_seed7.csv");
    let (header, data) = rows(&csv);
    assert_eq!(header.len(), 4);
    assert_eq!(data.len(), 15);
    assert!(tmp.path().join("pendulum_n15_seed7.meta.json").exists());
    assert!(tmp.path().join("pendulum_n15_seed7.config.json").exists());
}

#[test]
fn gen_data_reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["gen-data", "--system", "modified_pendulum", "--n", "20", "--seed", "11", "--out", "x.csv"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for name in ["x.csv", "x.meta.json", "x.config.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn galactic_dataset_has_eight_columns() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen-data", "--system", "galactic", "--n", "1000", "--region", "-2:2", "--out", "g.csv"]);
    let (header, data) = rows(&tmp.path().join("g.csv"));
    assert_eq!(header.len(), 8);
    assert_eq!(data.len(), 1000);
    assert!(data.iter().flat_map(|r| &r[..4]).all(|v| (-2.0..=2.0).contains(v)));
}

#[test]
fn region_per_coordinate() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen-data", "--system", "pendulum", "--region", "-1:0", "--region", "3:4", "--out", "r.csv"]);
    let (_, data) = rows(&tmp.path().join("r.csv"));
    assert!(data.iter().all(|r| (-1.0..=0.0).contains(&r[0]) && (3.0..=4.0).contains(&r[1])));
}

#[test]
fn seed_precedence() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let seed_of = |name: &str| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
        v["seed"].as_u64().unwrap()
    };
    let run = |env: Option<&str>, extra: &[&str], out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_psym"));
        cmd.current_dir(dir).env_remove("PSYM_SEED");
        if let Some(s) = env {
            cmd.env("PSYM_SEED", s);
        }
        let output = cmd
            .args(["gen-data", "--system", "pendulum", "--n", "2", "--out", out])
            .args(extra)
            .output()
            .unwrap();
        assert!(output.status.success());
    };
    fs::write(dir.join("c.json"), r#"{"seed": 9}"#).unwrap();
    run(None, &[], "a.csv");
    assert_eq!(seed_of("a.config.json"), 0);
    run(Some("5"), &[], "b.csv");
    assert_eq!(seed_of("b.config.json"), 5);
    run(Some("5"), &["--config", "c.json"], "c.csv");
    assert_eq!(seed_of("c.config.json"), 9);
    run(Some("5"), &["--config", "c.json", "--seed", "2"], "d.csv");
    assert_eq!(seed_of("d.config.json"), 2);
}

#[test]
fn config_file_values_are_used_and_unknown_keys_rejected() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("c.json"), r#"{"system": "bead_on_wire", "n": 4}"#).unwrap();
    ok(dir, &["gen-data", "--config", "c.json", "--n", "6", "--out", "x.csv"]);
    let (_, data) = rows(&dir.join("x.csv"));
    assert_eq!(data.len(), 6);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("x.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["system_name"], "bead_on_wire");

    fs::write(dir.join("bad.json"), r#"{"system": "pendulum", "samples": 4}"#).unwrap();
    let out = psym(dir, &["gen-data", "--config", "bad.json", "--out", "y.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("y.csv").exists());
}

#[test]
fn invalid_flags_leave_no_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let data = pendulum_data(dir);
    let before = files(dir);
    let data = data.to_str().unwrap();
    let cases: &[&[&str]] = &[
        &["gen-data", "--system", "unknown", "--out", "a.csv"],
        &["gen-data", "--system", "pendulum", "--region", "-2:2", "--region", "0:1", "--region", "0:1", "--out", "a.csv"],
        &["gen-data", "--system", "pendulum", "--region", "2", "--out", "a.csv"],
        &["gen-data", "--system", "pendulum", "--T", "0.015", "--h-gen", "0.01", "--out", "a.csv"],
        &["gen-data", "--system", "pendulum", "--n", "0", "--out", "a.csv"],
        &["gen-data", "--system", "pendulum", "--frobnicate", "--out", "a.csv"],
        &["train", "--data", data, "--activation", "sigmoid", "--out", "m.json"],
        &["train", "--data", data, "--degrees", "3", "--out", "m.json"],
        &["train", "--data", data, "--h", "0.003", "--out", "m.json"],
        &["train", "--data", data, "--beta1", "1.5", "--out", "m.json"],
        &["train", "--out", "m.json"],
        &["sympcheck", "--steps", "0.5,0.25", "--out", "s.csv"],
        &["sympcheck", "--y", "1,1,1", "--out", "s.csv"],
        &["sympcheck", "--map", "exact-rotation", "--out", "s.csv"],
        &["order-check", "--steps", "0.1,0.05,2", "--out", "o.csv"],
        &["repro", "--example", "example9", "--out-dir", "r"],
        &["repro", "--example", "1", "--columns", "some", "--out-dir", "r"],
    ];
    for args in cases {
        let out = psym(dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
        assert_eq!(files(dir), before, "{args:?} left files behind");
    }
}

#[test]
fn zero_epochs_store_the_initialization() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    pendulum_data(dir);
    ok(dir, &["train", "--data", "d.csv", "--epochs", "0", "--seed", "4", "--out", "m.json"]);
    let ckpt = read_checkpoint(&dir.join("m.json")).unwrap();
    let net = ckpt.to_net().unwrap();
    let init = GradientNet::init(net.architecture().clone(), 4);
    assert_eq!(net.params(), init.params());
    assert_eq!(net.num_params(), 274);
    let (_, history) = rows(&dir.join("m.history.csv"));
    assert_eq!(history.len(), 1);
}

#[test]
fn relu_and_pade_checkpoints_differ_and_load() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    pendulum_data(dir);
    ok(dir, &["train", "--data", "d.csv", "--epochs", "5", "--activation", "relu", "--out", "relu.json"]);
    ok(dir, &["train", "--data", "d.csv", "--epochs", "5", "--activation", "pade", "--out", "pade.json"]);
    let relu = read_checkpoint(&dir.join("relu.json")).unwrap();
    let pade = read_checkpoint(&dir.join("pade.json")).unwrap();
    assert_ne!(relu, pade);
    assert_eq!(relu.activation.kind, "relu");
    assert_eq!(relu.to_net().unwrap().num_params(), 258);
    assert_eq!(pade.to_net().unwrap().num_params(), 274);
    let (_, h) = rows(&dir.join("pade.history.csv"));
    assert_eq!(h.len(), 6);
}

#[test]
fn training_reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        pendulum_data(dir);
        ok(dir, &["train", "--data", "d.csv", "--epochs", "20", "--out", "m.json"]);
        ok(dir, &["evaluate", "--checkpoint", "m.json", "--metric", "energy", "--horizon", "2", "--out", "e.csv"]);
    }
    for name in ["d.csv", "m.json", "m.history.csv", "m.config.json", "e.csv", "e.meta.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn diverging_training_fails_without_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "--system", "pendulum", "--n", "4", "--T", "0.5", "--h-gen", "0.5", "--seed", "2", "--out", "d.csv"]);
    let out = psym(
        dir,
        &[
            "train", "--data", "d.csv", "--h", "0.5", "--epochs", "200", "--lr", "1000", "--width", "4", "--summands", "8",
            "--activation", "taylor", "--out", "m.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
    assert!(!dir.join("m.json").exists());
}

#[test]
fn prediction_and_error_curves() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    pendulum_data(dir);
    ok(dir, &["train", "--data", "d.csv", "--epochs", "10", "--out", "m.json"]);
    ok(dir, &["predict", "--checkpoint", "m.json", "--y0", "-0.5,0.25", "--horizon", "1", "--out", "p.csv"]);
    let (header, states) = rows(&dir.join("p.csv"));
    assert_eq!(header, ["t", "y_1", "y_2"]);
    assert_eq!(states.len(), 101);
    assert_eq!(&states[0][1..], &[-0.5, 0.25]);

    let stdout = ok(dir, &["evaluate", "--checkpoint", "m.json", "--metric", "pred-error", "--horizon", "1", "--out", "e.csv"]);
    let (_, curve) = rows(&dir.join("e.csv"));
    assert_eq!(curve.len(), 101);
    assert_eq!(curve[0], [0.0, 0.0]);
    let meta: MetricMeta = formats::read_json(&dir.join("e.meta.json")).unwrap();
    assert_eq!(meta.checkpoint_hash, formats::file_sha256(&dir.join("m.json")).unwrap());
    assert_eq!(meta.value, curve.iter().map(|r| r[1]).fold(0.0, f64::max));
    assert!(stdout.starts_with("pred-error "));
}

/// `∇H(y) = y` for the harmonic oscillator: identity `A`, one Taylor summand `σ(x) = x`.
const HARMONIC_ORACLE: &str = r#"{
  "schema_version": 1, "system_name": "harmonic", "d": 1, "l": 2, "S": 1,
  "activation": {"kind": "taylor"},
  "weights": {"A": [[1, 0, 0, 1]], "B": [[0, 0, 0, 0]], "b": [0, 0], "activation_params": [[]]},
  "train_config": {"h": 0.01, "steps": 1, "epochs": 0, "learning_rate": 0.01, "beta1": 0.9, "beta2": 0.999,
                   "epsilon": 1e-8, "seed": 0, "width": 2, "summands": 1, "activation": {"kind": "taylor"}},
  "seed": 0
}"#;

#[test]
fn oracle_checkpoint_has_tiny_trajectory_error() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("h.json"), HARMONIC_ORACLE).unwrap();
    let stdout = ok(dir, &["evaluate", "--checkpoint", "h.json", "--metric", "traj-error", "--out", "t.csv"]);
    let meta: MetricMeta = formats::read_json(&dir.join("t.meta.json")).unwrap();
    assert!(meta.value < 1e-8, "{}", meta.value);
    assert!(stdout.contains("traj-error"));
    let (_, curve) = rows(&dir.join("t.csv"));
    assert_eq!(curve.len(), 60_001);
}

#[test]
fn order_check_slope_is_four() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(tmp.path(), &["order-check", "--system", "pendulum", "--y0", "1,0", "--out", "o.csv"]);
    let s = slope(&stdout);
    assert!((3.8..=4.2).contains(&s), "{s}");
    let (header, data) = rows(&tmp.path().join("o.csv"));
    assert_eq!(header, ["h", "error"]);
    assert_eq!(data.len(), 4);
}

#[test]
fn sympcheck_slope_on_pendulum() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(tmp.path(), &["sympcheck", "--system", "pendulum", "--y", "1,1", "--out", "s.csv"]);
    let s = slope(&stdout);
    assert!((8.0..=10.0).contains(&s), "{s}");
    let (header, data) = rows(&tmp.path().join("s.csv"));
    assert_eq!(header, ["h", "residual"]);
    assert_eq!(data.len(), 3);
}

#[test]
fn exact_rotation_reports_noise_floor() {
    let tmp = TempDir::new().unwrap();
    let out = psym(tmp.path(), &["sympcheck", "--system", "harmonic", "--map", "exact-rotation", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("below noise floor"));
    let meta: serde_json::Value = formats::read_json(&tmp.path().join("s.meta.json")).unwrap();
    assert!(meta["slope"].is_null());
}

#[test]
fn repro_writes_summary() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let stdout = ok(
        dir,
        &["repro", "--example", "example2", "--columns", "pade", "--seeds", "0,1", "--epochs", "3", "--traj-steps", "50", "--out-dir", "r"],
    );
    assert!(stdout.contains("pade_n15_s4"));
    assert!(dir.join("r/summary.json").exists());
    let text = fs::read_to_string(dir.join("r/summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(dir.join("r/pade_n15_s4_seed1.json").exists());
    read_checkpoint(&dir.join("r/pade_n15_s4_seed0.json")).unwrap().to_net().unwrap();
}
