use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-rot"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const RIGID: &str = r#"{"map": {"family": "rigid", "params": {"rho": [0.25, 0.125]}}, "analysis": "rotset",
    "params": {"n": 64, "grid_n": 4}}"#;

#[test]
fn rigid_rotset_writes_constant_rows() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), "c.json", RIGID);
    let o = run(&c, &t.path().join("out"), &[]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(t.path().join("out/rotset.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let expect = 0.25 * f[0] + 0.125 * f[1];
        assert_eq!((f[3], f[4]), (expect, expect));
        rows += 1;
    }
    assert!(rows > 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["analysis"], "rotset");
    assert!(report["timing_ms"].is_null());
}

#[test]
fn config_errors_exit_3() {
    let t = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset", "params": {"grid_n": 0}}"#,
        r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "rotset", "colour": 1}"#,
        r#"{"map": {"family": "rigid", "params": {"rho": [0.1, 0.2]}}, "analysis": "fourier"}"#,
        "not json",
    ];
    for (k, text) in cases.iter().enumerate() {
        let c = write_config(t.path(), &format!("c{k}.json"), text);
        let o = run(&c, &t.path().join("out"), &[]);
        assert_eq!(status(&o), 3, "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    }
    let o = run(&t.path().join("missing.json"), &t.path().join("out"), &[]);
    assert_eq!(status(&o), 3);
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(status(&o), 3);
}

#[test]
fn window_too_small_exits_2() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(
        t.path(),
        "c.json",
        r#"{"map": {"family": "besicovitch", "params": {}}, "analysis": "semiconj",
            "params": {"r_count": 8, "cells_per_unit": 32, "ny": 32, "h_grid": 8, "halfwidth": 0.0}}"#,
    );
    let o = run(&c, &t.path().join("out"), &[]);
    assert_eq!(status(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("window too small"));
}

#[test]
fn semiconj_on_counterexample_reports_failure_and_succeeds() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(
        t.path(),
        "c.json",
        r#"{"map": {"family": "besicovitch", "params": {}}, "analysis": "semiconj",
            "params": {"r_count": 16, "cells_per_unit": 64, "ny": 64, "h_grid": 16, "samples": 256, "deviation_grid": 8}}"#,
    );
    let out = t.path().join("out");
    let o = run(&c, &out, &[]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["payload"]["projection_refused"], true);
    assert!(out.join("h_attempted.csv").exists());
    assert!(out.join("circloids/index.json").exists());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let configs = [
        (
            "classify.json",
            r#"{"map": {"family": "dehn", "params": {"m": 1, "alpha": 0.3}}, "analysis": "classify",
                "params": {"n": 64, "grid_n": 8, "diameter_n": 20}}"#,
        ),
        (
            "counterexample.json",
            r#"{"map": {"family": "besicovitch", "params": {}}, "analysis": "counterexample",
                "params": {"r_count": 8, "cells_per_unit": 32, "ny": 32, "h_grid": 8, "deviation_grid": 8, "transit_n": 20000}}"#,
        ),
        (
            "selftest.json",
            r#"{"map": {"family": "rigid", "params": {"rho": [0, 0]}}, "analysis": "topology-selftest"}"#,
        ),
    ];
    for (name, text) in configs {
        let c = write_config(t.path(), name, text);
        let a = t.path().join(format!("{name}.a"));
        let b = t.path().join(format!("{name}.b"));
        assert_eq!(status(&run(&c, &a, &["--seed", "11"])), 0, "{name}");
        assert_eq!(status(&run(&c, &b, &["--seed", "11"])), 0, "{name}");
        assert_eq!(read_tree(&a), read_tree(&b), "{name}");
    }
}

#[test]
fn seed_flag_is_echoed() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), "c.json", RIGID);
    let out = t.path().join("out");
    assert_eq!(status(&run(&c, &out, &["--seed", "42"])), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 42);
}

#[test]
fn selftest_passes_on_shipped_fixtures() {
    let o = bin().arg("selftest").output().unwrap();
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS space_between"));
}

#[test]
fn corrupted_fixture_fails_by_name() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path().join("fx");
    assert_eq!(status(&bin().args(["fixtures", "--regen", "--dir"]).arg(&dir).output().unwrap()), 0);
    let o = bin().arg("selftest").arg("--fixtures").arg(&dir).output().unwrap();
    assert_eq!(status(&o), 0);
    let f = dir.join("pocket_expected.pgm");
    let text = std::fs::read_to_string(&f).unwrap();
    let k = text.rfind("255").unwrap();
    let mut bad = text.clone();
    bad.replace_range(k..k + 3, "0");
    std::fs::write(&f, bad).unwrap();
    let o = bin().arg("selftest").arg("--fixtures").arg(&dir).output().unwrap();
    assert_eq!(status(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fixture:pocket"));
    let o = bin().args(["fixtures", "--dir"]).arg(&dir).output().unwrap();
    assert_eq!(status(&o), 1);
}

#[test]
fn shipped_fixtures_are_current() {
    let o = bin().arg("fixtures").output().unwrap();
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
