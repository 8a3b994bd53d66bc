use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fks(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fks"))
        .args(args)
        .current_dir(cwd)
        .env("FKS_OUTPUT_ROOT", cwd.join("runs"))
        .output()
        .unwrap()
}

const SMALL: &str = r#"{
    "grid": { "n": 256, "length": 40.0 },
    "alpha": 1.5,
    "delta": 1.0,
    "initial_condition": { "kind": "gaussian", "mass": 1.0, "width": 1.5 },
    "t_end": 0.3,
    "output": { "interval": 0.1 }
}"#;

#[test]
fn simulate_then_check() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.json"), SMALL).unwrap();
    let out = fks(&["simulate", "small.json", "--out", "run"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("completed"));
    assert!(tmp.path().join("run/metadata.json").exists());

    let out = fks(&["check", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all invariants hold"));
}

#[test]
fn set_overrides_reach_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.json"), SMALL).unwrap();
    let out = fks(
        &[
            "simulate",
            "small.json",
            "--set",
            "t_end=0.1",
            "--set",
            "output.directory=\"elsewhere\"",
        ],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cfg: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("elsewhere/config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(cfg["t_end"], 0.1);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        SMALL.replace("\"alpha\": 1.5", "\"alpha\": 0.5"),
    )
    .unwrap();
    let out = fks(&["simulate", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = fks(&["simulate", "--preset", "nonsense"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = fks(&["simulate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_run_directory_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fks(&["check", "nowhere"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn collapse_exits_10() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fks(
        &[
            "simulate",
            "--preset",
            "mesenchymal",
            "--set",
            "initial_condition.mass=30",
            "--set",
            "t_end=1",
        ],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(10),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("runs/mesenchymal/metadata.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["status"], "blow_up");
    assert!(meta["t_star"].is_array());
}

#[test]
fn values_sweep_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = format!(r#"{{ "base": {SMALL}, "parameter": "mass", "values": [0.5, 1.0] }}"#);
    fs::write(tmp.path().join("masses.json"), spec).unwrap();
    let out = fks(&["sweep", "masses.json", "--jobs", "2"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(tmp.path().join("runs/masses/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
