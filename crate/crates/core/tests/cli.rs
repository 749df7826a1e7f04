use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chiral_memory::config::parse_config;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chiral-memory"))
}

fn run_config(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, text).unwrap();
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

const SMALL_SPECTRUM: &str = r#"
experiment = "spectrum"

[grids]
delta_p_mhz = { start = -6.0, stop = 6.0, points = 5 }
omega_phi_mhz = [4.0, 8.0]
"#;

#[test]
fn spectrum_run_writes_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), SMALL_SPECTRUM, "spec");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("spec/spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "delta_p_mhz,omega_phi_mhz,re_tc_num,im_tc_num,re_tc_ana,im_tc_ana"
    );
    assert_eq!(lines.count(), 10);
    assert!(!csv.contains('\r'));
    let first = csv.lines().nth(1).unwrap();
    assert!(
        first.starts_with("-6.00000000000e0,4.00000000000e0,"),
        "{first}"
    );
    for name in ["summary.json", "effective_config.toml", "run.log"] {
        assert!(tmp.path().join("spec").join(name).exists(), "{name}");
    }
}

#[test]
fn storage_summary_has_metrics_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "experiment = \"storage\"\n", "store");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(tmp.path().join("store/summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "eta",
        "fidelity",
        "tau_d_ns",
        "energy_in",
        "energy_right",
        "energy_left",
    ] {
        assert!(v[key].is_number(), "{key} missing");
    }
    assert!((v["tau_d_ns"].as_f64().unwrap() - 1000.0).abs() < 1e-6);
    assert!(v["eta"].as_f64().unwrap() > 0.9);
    assert_eq!(v["config"]["experiment"], "storage");
    assert_eq!(v["config"]["system"]["gamma_mhz"], 10.0);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let names = ["spectrum.csv", "summary.json", "effective_config.toml"];
    let read = || names.map(|n| fs::read(tmp.path().join("same").join(n)).unwrap());
    assert!(run_config(tmp.path(), SMALL_SPECTRUM, "same")
        .status
        .success());
    let first = read();
    assert!(run_config(tmp.path(), SMALL_SPECTRUM, "same")
        .status
        .success());
    assert_eq!(first, read());
}

#[test]
fn echoed_config_reparses_to_the_same_config() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), SMALL_SPECTRUM, "echo")
        .status
        .success());
    let echo = fs::read_to_string(tmp.path().join("echo/effective_config.toml")).unwrap();
    let reparsed = parse_config(&echo).unwrap();
    let mut original = parse_config(SMALL_SPECTRUM).unwrap();
    original.output_dir = tmp.path().join("echo");
    assert_eq!(reparsed, original);
}

#[test]
fn invalid_config_fails_with_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "[system]\n\ngamma_phi_mhz = -1\n", "bad");
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma_phi"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn unknown_key_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "experiment = \"spectrum\"\nwidth = 3\n", "bad");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn config_and_preset_are_exclusive() {
    let out = bin()
        .args(["run", "--config", "x.toml", "--preset", "fig2a"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "--preset", "fig7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_command_prints_a_valid_config() {
    let out = bin().args(["preset", "fig4"]).output().unwrap();
    assert!(out.status.success());
    let cfg = parse_config(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.grid(&cfg.grids.tau_d_ns).len(), 5);
}

#[test]
fn preset_run_uses_thread_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--preset", "fig2bc", "--threads", "1", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let delays = fs::read_to_string(tmp.path().join("delays.csv")).unwrap();
    assert_eq!(delays.lines().count(), 4);
    assert!(tmp.path().join("traces.csv").exists());
}
