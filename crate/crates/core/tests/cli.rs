use std::path::Path;
use std::process::Command;

fn pdmp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pdmp-lab")).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

const DENSITY: &[&str] = &["density", "--example", "bhlm", "--rates", "3", "3", "--samples", "20000", "--grid", "16"];

#[test]
fn density_is_deterministic_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for dir in [&a, &b] {
        let mut args = vec!["--seed", "7", "--out", dir.to_str().unwrap()];
        args.extend_from_slice(DENSITY);
        let out = pdmp(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&a, "density.csv"), read(&b, "density.csv"));
    assert_eq!(read(&a, "density_total.pgm"), read(&b, "density_total.pgm"));

    let manifest = a.join("manifest.json");
    let out = pdmp(&["--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&a, "density.csv"), read(&c, "density.csv"));

    let m: serde_json::Value = serde_json::from_slice(&read(&a, "manifest.json")).unwrap();
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["config"]["task"]["command"], "density");
    assert!(m["artifacts"].as_array().unwrap().iter().any(|v| v == "density.csv"));
}

#[test]
fn different_seeds_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let mut args = vec!["--seed", seed, "--out", dir.to_str().unwrap()];
        args.extend_from_slice(DENSITY);
        assert!(pdmp(&args).status.success());
        outputs.push(read(&dir, "density.csv"));
    }
    assert_ne!(outputs[0], outputs[1]);
}

#[test]
fn theory_threshold_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pdmp(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "theory",
        "threshold",
        "--example",
        "bhlm",
        "--rates",
        "10",
        "10",
    ]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&read(tmp.path(), "threshold.json")).unwrap();
    assert_eq!(rep["bound"], 3.0);
    assert_eq!(rep["satisfied"], true);
}

#[test]
fn certificate_and_submersion_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = pdmp(&["--out", dir, "theory", "certificate", "--example", "bhlm", "--rates", "10", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value = serde_json::from_slice(&read(tmp.path(), "certificate.json")).unwrap();
    assert!(cert["n"].as_u64().unwrap() >= 3);
    let out = pdmp(&["--out", dir, "theory", "submersion", "--example", "vandermonde3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("submersion.json").exists());
}

#[test]
fn simulate_and_gamma_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = pdmp(&["--out", dir, "simulate", "--example", "malrieu", "--t-max", "5", "--x0", "-0.5,0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(read(tmp.path(), "trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,mode,x1,x2"));
    let out = pdmp(&["--out", dir, "gamma", "--example", "malrieu", "--grid", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(tmp.path(), "gamma.pgm").starts_with(b"P5\n64 64\n"));
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert!(!pdmp(&["--out", dir, "simulate", "--example", "nope"]).status.success());
    assert!(!pdmp(&["--out", dir, "simulate", "--example", "bhlm", "--rates", "1", "-1"]).status.success());
    assert!(!pdmp(&["--out", dir, "no-such-command"]).status.success());
    assert!(!pdmp(&["--out", dir]).status.success());
    assert!(pdmp(&["--help"]).status.success());
}
