use std::path::Path;
use std::process::Command;

use wsbem::export::{load_wsbm, parse_matrix_csv};
use wsbem::specfun::ModeSet;
use wsbem::wsm::ibar;

fn wsbem(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wsbem"))
        .args(args)
        .current_dir(cwd)
        .env_remove("WSBEM_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn sphere_run_writes_consistent_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"mesh": {"kind": "icosphere", "level": 1, "radius": 1.0}, "k": 1.0, "bc": "sound_soft",
            "output_dir": "out", "l_max": 2}"#,
    )
    .unwrap();
    let out = wsbem(&["run", "cfg.json"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let m = manifest(&dir);
    for rec in m["files"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(rec["name"].as_str().unwrap())).unwrap();
        assert_eq!(bytes.len() as u64, rec["bytes"].as_u64().unwrap());
    }
    let s = load_wsbm(&dir.join("S.wsbm")).unwrap();
    let s_csv = parse_matrix_csv(&std::fs::read_to_string(dir.join("S.csv")).unwrap()).unwrap();
    assert_eq!(s.shape(), (9, 9));
    assert!((&s - &s_csv).norm() < 1e-12 * s.norm());
    assert_eq!(std::fs::read_dir(dir.join("modes")).unwrap().count(), 9);
    assert!(m["diagnostics"]["cross_route_gap"].as_f64().unwrap() < 0.05);

    let spec = wsbem(&["spectrum", "out"], tmp.path());
    assert!(spec.status.success());
    let text = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",negative")), "{text}");
}

#[test]
fn deterministic_rerun_from_manifest_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"mesh": {"kind": "icosphere", "level": 1, "radius": 1.0}, "k": 1.5, "bc": "sound_hard",
            "output_dir": "first", "l_max": 2, "deterministic": true}"#,
    )
    .unwrap();
    assert!(wsbem(&["run", "cfg.json"], tmp.path()).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_wsbem"))
        .args(["run", "first/manifest.json"])
        .current_dir(tmp.path())
        .env("WSBEM_OUTPUT_DIR", "second")
        .env("WSBEM_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (a, b) = (manifest(&tmp.path().join("first")), manifest(&tmp.path().join("second")));
    assert_eq!(a["files"], b["files"]);
}

#[test]
fn empty_mesh_gives_trivial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"mesh": {"kind": "empty"}, "k": 2.0, "bc": "sound_soft", "l_max": 3, "output_dir": "out"}"#,
    )
    .unwrap();
    let out = wsbem(&["run", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let dir = tmp.path().join("out");
    assert_eq!(load_wsbm(&dir.join("S.wsbm")).unwrap(), ibar(&ModeSet::with_lmax(3)));
    assert_eq!(load_wsbm(&dir.join("Q.wsbm")).unwrap().norm(), 0.0);
    let spec = wsbem(&["spectrum", "out"], tmp.path());
    assert!(String::from_utf8_lossy(&spec.stdout).lines().all(|l| l.ends_with(",zero")));
}

#[test]
fn malformed_mesh_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 x\n3 0 1 2\n").unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"mesh": {"kind": "file", "path": "bad.off"}, "k": 1.0, "bc": "sound_soft", "output_dir": "out"}"#,
    )
    .unwrap();
    let out = wsbem(&["run", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert_eq!(err["line"], 5);
    assert!(tmp.path().join("out/error.json").exists());
}

#[test]
fn usage_and_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wsbem(&["frobnicate"], tmp.path()).status.code(), Some(1));
    std::fs::write(tmp.path().join("cfg.json"), r#"{"mesh": {"kind": "empty"}, "k": 1.0, "bc": "soft"}"#).unwrap();
    assert_eq!(wsbem(&["run", "cfg.json"], tmp.path()).status.code(), Some(2));
    assert_eq!(wsbem(&["spectrum", "missing"], tmp.path()).status.code(), Some(2));
}

#[test]
fn spectrum_classifies_synthetic_delays() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("eigenvalues.csv"),
        "index,delay,spatial\n0,-3.0,-3.0\n1,0.0,0.0\n2,80.5,80.5\n3,2e-4,2e-4\n",
    )
    .unwrap();
    let rows = wsbem::pipeline::cmd_spectrum(tmp.path(), None).unwrap();
    let classes: Vec<_> = rows.iter().map(|r| r.class).collect();
    assert_eq!(classes, ["negative", "zero", "zero", "positive"]);
    assert_eq!(rows.iter().filter(|r| r.class == "positive").count(), 1);
}

#[test]
fn validate_sphere_flags_tolerance_breach() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"mesh": {"kind": "icosphere", "level": 0, "radius": 1.0}, "k": 1.0, "bc": "sound_soft",
            "l_max": 2, "output_dir": "out", "tolerances": {"phase_deg": 0.01}}"#,
    )
    .unwrap();
    let out = wsbem(&["validate-sphere", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
