//! The binary end to end: exit codes, diagnostics, outputs on disk.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conic-spectra"));
    c.env_remove("CONIC_SPECTRA_CACHE");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("conic-spectra-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (status.code().unwrap_or(-1), String::from_utf8_lossy(&stdout).into(), String::from_utf8_lossy(&stderr).into())
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn canonical_pair_passes() {
    let d = scratch("canonical");
    let cfg = d.join("job.json");
    std::fs::write(&cfg, r#"{"curve": "quintic", "points": [{"x": [0.3, 0.4]}]}"#).unwrap();
    let (code, out, _) = run(bin().args(["canonical-test", "--config"]).arg(&cfg));
    assert_eq!(code, 0);
    let r = json(&out);
    let pair = &r["results"]["pairs"][0];
    assert_eq!(pair["canonical"], true);
    assert!(pair["margin"].as_f64().unwrap() < pair["threshold"].as_f64().unwrap());
    assert_eq!(r["pass"], true);
}

#[test]
fn malformed_json_reports_the_field() {
    let d = scratch("malformed");
    let cfg = d.join("job.json");
    std::fs::write(&cfg, r#"{"curve": "quintic", "budget": {"level": 0, "order": -3}}"#).unwrap();
    let (code, out, err) = run(bin().args(["c2", "--config"]).arg(&cfg));
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("budget.order"), "{err}");

    std::fs::write(&cfg, "{\"curve\": ").unwrap();
    assert_eq!(run(bin().args(["periods", "--config"]).arg(&cfg)).0, 2);
    assert_eq!(run(bin().args(["periods", "--curve", "quartic"])).0, 2);
    assert_eq!(run(bin().args(["periods", "--config", "/nonexistent/job.json"])).0, 2);
    assert_eq!(run(bin().args(["lattice", "--h", "(1 2)(3 4)", "--v", "(1 2)(3 4)"])).0, 2);
    assert_eq!(run(bin().args(["c2", "--curve", "sextic", "--budget", "1"])).0, 2);
    assert_eq!(run(bin().args(["kernels", "--curve", "sextic", "--workers", "0"])).0, 2);
    assert_eq!(run(bin().args(["no-such-command"])).0, 2);
}

#[test]
fn failed_check_and_failed_computation() {
    let d = scratch("failures");
    let cfg = d.join("job.json");
    std::fs::write(&cfg, r#"{"curve": "sextic", "omega": [[-0.3, -0.2], [1, 0]]}"#).unwrap();
    // two-point rule: the area check misses its bound
    let (code, out, err) = run(bin().args(["c2", "--budget", "0,2", "--seed", "1", "--config"]).arg(&cfg));
    assert_eq!(code, 3, "{err}");
    assert_eq!(json(&out)["pass"], false);
    assert!(err.contains("failed"));

    // a kernel base point on a branch point lies on the integration cycles
    std::fs::write(&cfg, r#"{"curve": "quintic", "points": [{"x": [1, 0]}]}"#).unwrap();
    let (code, _, err) = run(bin().args(["kernels", "--config"]).arg(&cfg));
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
}

#[test]
fn lattice_writes_json_csv_and_timing() {
    let d = scratch("lattice");
    let out = d.join("spectra.json");
    let (code, stdout, _) = run(bin().args(["lattice", "--h", "(1 2 3 4)", "--v", "(1 2)(3 4)", "--resolutions", "4,6", "--out"]).arg(&out));
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let r = json(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(r["results"]["surface"]["genus"], 2);
    assert_eq!(r["results"]["resolutions"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(d.join("spectra.n6.csv")).unwrap();
    assert!(csv.starts_with("index,dstar_d,d_dstar\n"));
    // one row per eigenvalue of D D^*, which has one per cell
    assert_eq!(csv.lines().count(), 1 + 2 * 4 * 36);
    let t = json(&std::fs::read_to_string(d.join("spectra.timing.json")).unwrap());
    assert!(t["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_and_workers_give_identical_files() {
    let d = scratch("rerun");
    let cache = d.join("cache");
    let mut payloads = Vec::new();
    for (i, workers) in ["1", "2", "1"].iter().enumerate() {
        let out = d.join(format!("k{i}.json"));
        let (code, _, _) = run(bin()
            .env("CONIC_SPECTRA_CACHE", &cache)
            .args(["kernels", "--curve", "sextic", "--seed", "5", "--workers", workers, "--out"])
            .arg(&out));
        assert_eq!(code, 0);
        // the output path is echoed, so compare with it normalised
        payloads.push(std::fs::read_to_string(&out).unwrap().replace(&format!("k{i}.json"), "k.json"));
    }
    assert!(std::fs::read_dir(&cache).unwrap().count() >= 1);
    assert_eq!(payloads[0], payloads[1]);
    assert_eq!(payloads[0], payloads[2]);
}

#[test]
fn config_command_must_match() {
    let d = scratch("mismatch");
    let cfg = d.join("job.json");
    std::fs::write(&cfg, r#"{"command": "c2", "curve": "sextic"}"#).unwrap();
    let (code, _, err) = run(bin().args(["periods", "--config"]).arg(&cfg));
    assert_eq!(code, 2);
    assert!(err.contains("command"));
    let (code, out, _) = run(bin().args(["periods", "--curve", r#"{"f": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}"#]));
    assert_eq!(code, 0);
    assert_eq!(json(&out)["results"]["genus"], 2);
}
