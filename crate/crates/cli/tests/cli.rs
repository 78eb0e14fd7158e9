use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn dislocore(mode: &str, scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dislocore"))
        .args([mode, "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("s.json");
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn simulate_writes_headed_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let o = dislocore("simulate", &scenarios().join("simulate_disk.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("boundary_collision, t=1.598e-2"), "{summary}");

    let csv = fs::read_to_string(out.path().join("simulate_disk.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# dislocore 0.1.0 scenario "));
    assert_eq!(lines[1], "t,x1,y1");
    assert!(lines.last().unwrap().starts_with("# event,boundary_collision,t=1.59797"));

    let jsonl = fs::read_to_string(out.path().join("simulate_disk.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(header["record"], "header");
    assert_eq!(header["version"], "0.1.0");

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("simulate_disk.json")).unwrap()).unwrap();
    assert_eq!(report["scenario_hash"], header["scenario"]);
    assert_eq!(report["passed"], true);
}

#[test]
fn green_check_and_verify_modes_pass() {
    for (mode, file) in [("green-check", "green_check.json"), ("verify-boundary", "verify_boundary.json"), ("verify-pair", "verify_pair.json")] {
        let out = tempfile::tempdir().unwrap();
        let o = dislocore(mode, &scenarios().join(file), out.path());
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        r#"{"version": 1, "name": "strict", "seed": 3, "domain": {"kind": "disk", "radius": 1.0},
            "mode": "green-check", "pairs": 10, "panels": 16, "tolerance": 1e-15}"#,
    );
    let o = dislocore("green-check", &s, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stdout).unwrap().contains("[FAIL]"));
}

#[test]
fn invalid_scenarios_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        r#"{"version": 1, "domain": {"kind": "disk", "radius": 1.0}, "mode": "simulate",
            "dislocations": {"positions": [[0.5, 0.0]], "moduli": [1]}, "options": {"rel_tol": -1.0}}"#,
    );
    let o = dislocore("simulate", &s, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("rel_tol"));

    let o = dislocore("sweep", &scenarios().join("simulate_disk.json"), dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("field `mode`"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let s = scenarios().join("converge_single.json");
    assert_eq!(dislocore("converge", &s, a.path()).status.code(), Some(0));
    assert_eq!(dislocore("converge", &s, b.path()).status.code(), Some(0));
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}
