use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tubeflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubeflow")).args(args).output().expect("binary runs")
}

fn defaults() -> Value {
    let out = tubeflow(&["print-defaults"]);
    assert!(out.status.success());
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.display().to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn defaults_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = defaults();
    assert_eq!(cfg["deformation"]["k0"], 3);
    let path = write_config(tmp.path(), &cfg);
    let again = Command::new(env!("CARGO_BIN_EXE_tubeflow"))
        .args(["--config", &path, "print-defaults"])
        .output()
        .unwrap();
    assert!(again.status.success());
}

#[test]
fn empty_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &serde_json::json!({}));
    let out = tubeflow(&["--config", &path, "--out", tmp.path().to_str().unwrap(), "lyapunov"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing field `model`"));
    assert!(!tmp.path().join("summary.json").exists());

    let mut cfg = defaults();
    cfg["scan"]["points"] = serde_json::json!(20);
    let path = write_config(tmp.path(), &cfg);
    let out = tubeflow(&["--config", &path, "lyapunov"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scan.points"));

    let out = tubeflow(&["--config", "/nonexistent/config.json", "lyapunov"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_deformation_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = tubeflow(&["--out", d1.to_str().unwrap(), "verify-deformation"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion  1 [PASS]") && stdout.contains("criterion 10 [PASS]"));

    let table = std::fs::read_to_string(d1.join("central_table.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(table.as_bytes());
    for row in rows.records() {
        let row = row.unwrap();
        let k: Vec<f64> = (2..5).map(|i| row[i].parse().unwrap()).collect();
        let last = if &row[0] == "undeformed" { -0.25 } else { 0.0 };
        assert!((k[0] + 1.0).abs() < 1e-9 && (k[1] + 0.25).abs() < 1e-9 && (k[2] - last).abs() < 1e-9, "{k:?}");
    }

    assert!(tubeflow(&["--out", d2.to_str().unwrap(), "verify-deformation"]).status.success());
    let (mut s1, mut s2) = (summary(&d1), summary(&d2));
    s1.as_object_mut().unwrap().remove("timestamp");
    s2.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(s1, s2);
    assert_eq!(s1["status"], "pass");
    for name in s1["artifacts"].as_array().unwrap() {
        let name = name.as_str().unwrap();
        assert_eq!(std::fs::read(d1.join(name)).unwrap(), std::fs::read(d2.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn removing_the_deformation_fails_the_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = defaults();
    cfg["deformation"]["amplitude"] = serde_json::json!(0.0);
    let path = write_config(tmp.path(), &cfg);
    let out = tubeflow(&["--config", &path, "--out", tmp.path().to_str().unwrap(), "verify-deformation"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("witness"));
    let s = summary(tmp.path());
    assert_eq!(s["status"], "fail");
    let witness = s["criteria"].as_array().unwrap().iter().find(|c| c["criterion"] == 10).unwrap();
    assert_eq!(witness["passed"], false);
    let k = witness["checks"].as_array().unwrap().iter().map(|c| c["measured"].as_f64().unwrap()).fold(0.0, f64::max);
    assert!((k - 0.25).abs() < 1e-9, "{k}");
}

#[test]
fn lyapunov_and_oracles_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tubeflow(&["--out", tmp.path().to_str().unwrap(), "--threads", "2", "lyapunov"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(tmp.path().join("spectra.csv").exists());
    let out = tubeflow(&["--out", tmp.path().to_str().unwrap(), "oracle-suite"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(summary(tmp.path())["subcommand"], "oracle-suite");
}

#[test]
fn small_curvature_scan_writes_points() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = defaults();
    cfg["scan"]["points"] = serde_json::json!(9);
    cfg["scan"]["coarse_points"] = serde_json::json!(5);
    cfg["scan"]["t_samples"] = serde_json::json!(1);
    cfg["scan"]["s_refine"] = serde_json::json!(3);
    cfg["scan"]["random_planes"] = serde_json::json!(2);
    cfg["scan"]["fit_t_samples"] = serde_json::json!(1);
    cfg["deformation"]["eps_sweep"] = serde_json::json!([0.1]);
    let path = write_config(tmp.path(), &cfg);
    let out = tubeflow(&["--config", &path, "--out", tmp.path().to_str().unwrap(), "scan-curvature"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion  7") && stdout.contains("criterion  8 [PASS]"), "{stdout}");
    let points = std::fs::read_to_string(tmp.path().join("curvature_b.csv")).unwrap();
    assert!(points.lines().count() > 9 * 9);
    let detail: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("scan-curvature.json")).unwrap()).unwrap();
    assert!(detail["nonpositivity"]["report"]["max_off_axis"].as_f64().unwrap() < 0.0);
}

#[test]
fn unwritable_output_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = tubeflow(&["--out", blocker.join("sub").to_str().unwrap(), "lyapunov"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}
