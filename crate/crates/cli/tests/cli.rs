use std::path::Path;
use std::process::{Command, Output};

fn mcflab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab"))
        .args(args)
        .env("MCFLAB_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_slice(&text).unwrap()
}

#[test]
fn soliton_small_w_ratio_for_n_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcflab(&["-q", "soliton", "--n", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path(), "soliton");
    let ratio = m["results"]["small_w_ratio"].as_f64().unwrap();
    assert!((ratio * 6.0 - 1.0).abs() < 1e-3, "P/w² = {ratio}");
    assert_eq!(m["config"]["params"]["n"], 3);
    assert_eq!(m["seed"], 0);
    for name in ["soliton.json", "soliton.csv", "config.toml"] {
        assert!(m["artifacts"][name].is_string(), "{name} missing from manifest");
    }
    assert!(!dir.path().join(".lock").exists());
}

#[test]
fn end_before_start_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcflab(&["evolve", "--tau-end", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau_end"));
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = mcflab(&["soliton", "--set", "params.gamma=-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("γ > 0"));

    let out = mcflab(&["soliton", "--set", "solver.nodez=5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodez"));

    let out = mcflab(&["soliton", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[params]\nn = 7\n\n[soliton]\nw_max = 50.0\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = mcflab(
        &["-q", "--config", cfg.to_str().unwrap(), "--set", "soliton.w_max=60", "soliton"],
        &out_dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir, "soliton");
    assert_eq!(m["results"]["n"], 7);
    assert_eq!(m["config"]["soliton"]["w_max"].as_f64(), Some(60.0));
}

#[test]
fn identical_soliton_runs_have_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(mcflab(&["-q", "soliton"], &a).status.success());
    assert!(mcflab(&["-q", "soliton"], &b).status.success());
    let read = |d: &Path| std::fs::read(d.join("soliton.manifest.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".lock"), "1").unwrap();
    let out = mcflab(&["soliton"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("in use"));
}
