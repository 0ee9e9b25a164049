//! End-to-end tests of the command-line contract: exit codes, report
//! formats, determinism, and validation messages.

use std::path::PathBuf;
use std::process::{Command, Output};

use yblab_core::{Boundary, LatticeSpec, Model, SpinVar};

fn yblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yblab")).args(args).output().expect("binary runs")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("yblab-cli-test-{}-{name}", std::process::id()));
    p
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn theta1_at_the_origin_prints_zero() {
    let out = yblab(&["specfun-eval", "--fn", "theta1", "--z", "0", "--q", "0.3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn specfun_eval_names_a_missing_key() {
    let out = yblab(&["specfun-eval", "--fn", "theta1", "--z", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--q"), "{}", stderr(&out));
}

#[test]
fn str_campaign_passes_and_reports_deterministically() {
    let path = tmp_path("det.json");
    let args = [
        "verify-str",
        "--model",
        "gamma",
        "--count",
        "4",
        "--tol",
        "1e-6",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ];
    let first = yblab(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let bytes1 = std::fs::read(&path).unwrap();
    let second = yblab(&args);
    assert!(second.status.success());
    let bytes2 = std::fs::read(&path).unwrap();

    let strip = |b: &[u8]| -> Vec<String> {
        String::from_utf8(b.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.contains("timestamp_unix_ms"))
            .map(str::to_owned)
            .collect()
    };
    assert_eq!(strip(&bytes1), strip(&bytes2));

    let report: serde_json::Value = serde_json::from_slice(&bytes1).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["config"]["seed"], serde_json::json!(9));
    let items = report["items"].as_array().unwrap();
    assert_eq!(items.len(), 4);
    for (k, item) in items.iter().enumerate() {
        assert_eq!(item["id"], serde_json::json!(k));
        assert_eq!(item["seed"], serde_json::json!(9 + k));
        assert!(item["config"]["outer"].is_array());
        assert!(item["report"]["rel_residual"].as_f64().unwrap() <= 1e-6);
    }

    // Round-trip: re-serializing the parsed report reproduces the numbers.
    let reparsed: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    for (a, b) in items.iter().zip(reparsed["items"].as_array().unwrap()) {
        let x = a["report"]["rel_residual"].as_f64().unwrap();
        let y = b["report"]["rel_residual"].as_f64().unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }
    std::fs::remove_file(&path).ok();
}

#[test]
fn unattainable_tolerance_exits_one_and_notes_the_budget() {
    let path = tmp_path("budget.json");
    let out = yblab(&[
        "verify-str",
        "--model",
        "gamma",
        "--count",
        "2",
        "--tol",
        "1e-30",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
    for item in report["items"].as_array().unwrap() {
        assert_eq!(item["passed"], serde_json::Value::Bool(false));
        assert!(
            item["error"].as_str().unwrap().contains("budget exhausted"),
            "{}",
            item["error"]
        );
    }
    std::fs::remove_file(&path).ok();
}

#[test]
fn csv_report_has_canonical_columns() {
    let path = tmp_path("report.csv");
    let out = yblab(&[
        "verify-str",
        "--model",
        "gamma",
        "--count",
        "3",
        "--seed",
        "5",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,lhs,rhs,rel_residual,passed");
    assert_eq!(lines.len(), 4);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), 5);
    // 17 significant digits: d.dddddddddddddddde±ee
    assert_eq!(cells[1].split('.').nth(1).unwrap().split('e').next().unwrap().len(), 16);
    assert_eq!(cells[4], "true");
    std::fs::remove_file(&path).ok();
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let out = yblab(&["verify-str", "--model", "quartic", "--count", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--model"), "{}", stderr(&out));

    let out = yblab(&["verify-str", "--model", "gamma", "--frobnicate", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--frobnicate"), "{}", stderr(&out));

    let cfg = tmp_path("bad-config.json");
    std::fs::write(&cfg, r#"{ "model": "gamma", "count": 2, "frobnicate": 1 }"#).unwrap();
    let out = yblab(&["verify-str", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("frobnicate"), "{}", stderr(&out));
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn campaign_config_file_drives_a_run_and_flags_override_it() {
    let cfg = tmp_path("campaign.json");
    std::fs::write(&cfg, r#"{ "model": "gamma", "count": 3, "tol": 1e-6, "seed": 11 }"#).unwrap();
    let path = tmp_path("from-file.json");
    let out = yblab(&[
        "verify-str",
        "--config",
        cfg.to_str().unwrap(),
        "--count",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["config"]["count"], serde_json::json!(2));
    assert_eq!(report["config"]["seed"], serde_json::json!(11));
    std::fs::remove_file(&cfg).ok();
    std::fs::remove_file(&path).ok();
}

#[test]
fn inversion_campaign_passes_at_its_default_tolerance() {
    let out = yblab(&["verify-inversion", "--model", "elliptic", "--count", "40", "--seed", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn limit_sweeps_shrink_for_both_degenerations() {
    let out = yblab(&["verify-limit", "--limit", "hyperbolic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = yblab(&["verify-limit", "--limit", "strong-kappa", "--beta", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn write_spec_file(name: &str, rows: usize, cols: usize) -> PathBuf {
    let m = Model::Gamma;
    let a = m.spectral(0.4).unwrap();
    let ring: Vec<SpinVar> = (0..2 * (rows + cols))
        .map(|k| SpinVar::dual(0.3 * (k as f64) - 0.5, (k as i64 % 3) - 1))
        .collect();
    let spec = LatticeSpec::new(m, rows, cols, a, Boundary::Ring(ring)).unwrap();
    let path = tmp_path(name);
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    path
}

#[test]
fn lattice_exact_reports_a_finite_partition_value() {
    let spec = write_spec_file("exact-spec.json", 1, 1);
    let path = tmp_path("exact.json");
    let out = yblab(&[
        "lattice-exact",
        "--spec",
        spec.to_str().unwrap(),
        "--nodes",
        "48",
        "--n-max",
        "4",
        "--half-width",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let item = &report["items"][0];
    assert!(item["log_z"].as_f64().unwrap().is_finite());
    assert!(item["truncation_error"].as_f64().unwrap() >= 0.0);
    std::fs::remove_file(&spec).ok();
    std::fs::remove_file(&path).ok();
}

#[test]
fn lattice_spec_gates_surface_as_config_errors() {
    let spec = write_spec_file("gate-spec.json", 1, 1);
    let text = std::fs::read_to_string(&spec).unwrap().replace("\"rows\":1", "\"rows\":3");
    std::fs::write(&spec, text.replace("\"cols\":1", "\"cols\":2")).unwrap();
    let out = yblab(&["lattice-exact", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("internal sites"), "{}", stderr(&out));
    std::fs::remove_file(&spec).ok();
}

#[test]
fn lattice_mc_emits_one_csv_row_per_edge() {
    let spec = write_spec_file("mc-spec.json", 1, 1);
    let path = tmp_path("mc.csv");
    let out = yblab(&[
        "lattice-mc",
        "--spec",
        spec.to_str().unwrap(),
        "--sweeps",
        "2000",
        "--burn-in",
        "200",
        "--thin",
        "4",
        "--batches",
        "8",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "edge,mean_log_w,stderr");
    assert_eq!(lines.len(), 1 + 4);
    std::fs::remove_file(&spec).ok();
    std::fs::remove_file(&path).ok();
}

#[test]
fn thread_env_var_is_validated() {
    let ok = Command::new(env!("CARGO_BIN_EXE_yblab"))
        .env("YBLAB_THREADS", "1")
        .args(["verify-str", "--model", "gamma", "--count", "2", "--seed", "3"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_yblab"))
        .env("YBLAB_THREADS", "zebra")
        .args(["verify-str", "--model", "gamma", "--count", "2"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("YBLAB_THREADS"));
}
