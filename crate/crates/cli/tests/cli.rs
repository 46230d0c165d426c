use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"{
  "moments": [0, 1, 2],
  "noise": { "sweep": [0.001, 0.01, 0.1] },
  "mitigation": { "shots": 2000, "twirls": 2, "repetitions": 3, "draws": 20 },
  "multi_step": { "double_steps": 2 }
}"#;

fn qem(dir: &Path, args: &[&str]) -> std::process::Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, SMALL).unwrap();
    Command::new(env!("CARGO_BIN_EXE_qem"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = qem(dir.path(), &["single-step"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"shotz": 10}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qem"))
        .args(["vqe", "--seed", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn reruns_are_byte_identical() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        for cmd in ["single-step", "multi-step", "noise-sweep"] {
            let out = qem(dir.path(), &[cmd, "--seed", "11", "--threads", threads]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        }
        let mut files: Vec<_> = std::fs::read_dir(dir.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let a = run("1");
    let b = run("2");
    assert_eq!(a.len(), 5);
    assert!(a == b);
}

#[test]
fn manifest_records_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = qem(dir.path(), &["selftest", "--seed", "5"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("out/selftest-manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("out/selftest.csv")).unwrap();
    let hash = m["config_hash"].as_str().unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(hash)));
}
