use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn csdc(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csdc"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn jitter_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"triangle": [0.3, 2.0, 4.0], "sweep": {"jitter": true}}"#);
    let out = csdc(&["sweep"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"triangle": [0.3, 2.0, 4.0], "sweeep": {}}"#);
    let out = csdc(&["sweep"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_csdc")).arg("rank").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cross_writes_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"triangle": [0.3, 2.0, 4.0], "seed": 3, "cross": {"random_paths": 3}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = csdc(&["cross"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "cross");
    for f in manifest["files"].as_array().unwrap() {
        let name = f["name"].as_str().unwrap();
        assert_eq!(fs::metadata(out_dir.join(name)).unwrap().len(), f["bytes"].as_u64().unwrap());
    }
    let crossings: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("crossings.json")).unwrap()).unwrap();
    assert!(!crossings.as_array().unwrap().is_empty());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"triangle": [0.3, 2.0, 4.0], "seed": 1, "rank": {"on_dc": 5, "off_dc": 5}}"#);
    let read = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = csdc(&["rank", "--seed", seed], &cfg, &out);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("rank.json")).unwrap()
    };
    assert_ne!(read("1", "a"), read("2", "b"));
    assert_eq!(read("2", "b"), read("2", "c"));
}

#[test]
fn map_writes_binary_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"triangle": [0.3, 2.0, 4.0], "seed": 4,
            "map": {"slice": {"origin": [-2, -2, 1], "u": [4, 0, 0], "v": [0, 4, 0], "nu": 20, "nv": 10}, "boundary_probes": 5}}"#,
    );
    let out = dir.path().join("out");
    let o = csdc(&["map"], &cfg, &out);
    assert!(matches!(o.status.code(), Some(0 | 2)));
    let pgm = fs::read(out.join("count_map.pgm")).unwrap();
    let header = b"P5\n20 10\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 200);
}
