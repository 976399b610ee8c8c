use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vardiff-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, name: &str, config: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = dir.join(format!("{name}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (lab(&args), out)
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn presets_lists_catalog() {
    let o = lab(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["harmonic-xy", "plane-wave", "flat-strip"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("Hamilton-Jacobi"));
    assert!(text.contains("T = J"));
}

#[test]
fn action_check_on_flat_strip() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "action",
        r#"{"suite": "action-check", "geometry": {"preset": "flat-strip"}, "resolutions": [5, 9]}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    let digest = r["config_digest"].as_str().unwrap();
    for rec in r["records"].as_array().unwrap() {
        assert!((rec["values"]["J"].as_f64().unwrap() + 0.5).abs() < 1e-14);
        assert!(rec["values"]["tj_gap"].as_f64().unwrap() <= 1e-3);
        assert_eq!(rec["config_digest"], digest);
    }
    assert!(out.join("metadata.json").exists());
}

#[test]
fn hj_verify_on_plane_wave() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "hj",
        r#"{"suite": "hj-verify", "geometry": {"preset": "plane-wave"}, "resolutions": [17]}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let rec = &r["records"][0];
    assert!(rec["values"]["max_hj_analytic"].as_f64().unwrap() <= 1e-12);
    let csv = std::fs::read_to_string(out.join("hj-verify_grid17.csv")).unwrap();
    assert!(csv.starts_with("tau,"));
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn report_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"suite": "eikonal-verify", "geometry": {"preset": "plane-wave"}, "resolutions": [17, 19], "seed": 7}"#;
    let (a, out_a) = run_config(dir.path(), "a", cfg, &["--jobs", "1"]);
    let (b, out_b) = run_config(dir.path(), "b", cfg, &["--jobs", "3"]);
    assert!(a.status.success() && b.status.success());
    let ra = std::fs::read(out_a.join("report.json")).unwrap();
    let rb = std::fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let csv_a = std::fs::read(out_a.join("eikonal-verify_grid17.csv")).unwrap();
    let csv_b = std::fs::read(out_b.join("eikonal-verify_grid17.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn unknown_key_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_config(
        dir.path(),
        "bad",
        r#"{"suite": "hj-verify", "geometry": {"preset": "plane-wave"}, "resolutions": [17], "resolution": 3}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`resolution`"));
}

#[test]
fn failed_tolerance_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "strict",
        r#"{"suite": "eikonal-verify", "geometry": {"preset": "plane-wave"}, "resolutions": [17],
            "tolerances": {"momenta_relative": 1e-12}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn quantum_run_writes_loadable_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "quantum",
        r#"{"suite": "quantum-evolve",
            "model": {"kind": "scalar-hyperbolic", "potential": [0.0, 0.0, -0.5]},
            "resolutions": [200],
            "quantum": {"sites": 1, "grid_points": 128, "foliation": {"kind": "flat", "duration": 0.5},
                        "compare_exact": true}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r["records"][0]["values"]["infidelity_vs_exact"].as_f64().unwrap() < 1e-4);
    let state = vardiff_core::quantum::load_snapshot(out.join("quantum_steps200.state")).unwrap();
    assert_eq!(state.len(), 128);
    assert!((state.norm() - 1.0).abs() < 1e-8);
}
