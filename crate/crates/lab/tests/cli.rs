use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_meanfield");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], env_out: Option<&Path>) -> (i32, String) {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("MEANFIELD_OUT");
    if let Some(p) = env_out {
        c.env("MEANFIELD_OUT", p);
    }
    let o = c.output().expect("binary runs");
    let text = String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().expect("exit code"), text)
}

fn write_config(dir: &Path, base: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(configs().join(base)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from}");
        text = text.replacen(from, to, 1);
    }
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn minimal_config_writes_initial_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("minimal.toml");
    let (code, text) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{text}");
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = traj.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("0.0,")));
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    for f in ["trajectory.csv", "weights.edges", "scaling.csv"] {
        assert!(manifest.contains(&format!("path = \"{f}\"")), "{f} missing:\n{manifest}");
    }
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn bad_config_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "minimal.toml", &[("cells = 32", "cells = 4")]);
    let (code, text) = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("grid.cells"), "{text}");
    let (code, _) = run(&["solve", "--config", "/nonexistent/c.toml"], None);
    assert_eq!(code, 2);
    let (code, _) = run(&["solve"], None);
    assert_eq!(code, 2);
    let (code, _) = run(&["--help"], None);
    assert_eq!(code, 0);
}

#[test]
fn stability_guard_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "minimal.toml",
        &[
            ("preset = \"linear_attraction\"\nstrength = 1.0", "preset = \"linear\"\nslope = 100.0"),
            ("t_end = 0.0", "t_end = 2.0"),
            ("dt = 0.05", "dt = 0.5"),
        ],
    );
    let (code, text) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("stability"), "{text}");
}

#[test]
fn environment_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("minimal.toml");
    let env_out = dir.path().join("from_env");
    let (code, text) = run(&["simulate", "--config", cfg.to_str().unwrap()], Some(&env_out));
    assert_eq!(code, 0, "{text}");
    assert!(env_out.join("manifest.toml").exists());
    // the flag wins over the environment
    let flag_out = dir.path().join("from_flag");
    let other = dir.path().join("unused");
    let (code, _) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", flag_out.to_str().unwrap()], Some(&other));
    assert_eq!(code, 0);
    assert!(flag_out.join("manifest.toml").exists());
    assert!(!other.exists());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("golden.toml");
    let read = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let (code, text) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed], None);
        assert_eq!(code, 0, "{text}");
        std::fs::read_to_string(out.join("trajectory.csv")).unwrap()
    };
    assert_ne!(read("a", "1"), read("b", "2"));
    assert_eq!(read("c", "1"), read("a", "1"));
    read("d", &i64::MAX.to_string());
    let (code, _) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", &u64::MAX.to_string()], None);
    assert_eq!(code, 2);
}

#[test]
fn reruns_and_thread_counts_give_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("golden.toml");
    for cmd in ["simulate", "solve", "observe", "rearrange", "convergence"] {
        let mut manifests = Vec::new();
        for (k, threads) in ["1", "3", "1"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}_{k}"));
            let (code, text) = run(
                &[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads],
                None,
            );
            assert_eq!(code, 0, "{cmd}: {text}");
            manifests.push(std::fs::read_to_string(out.join("manifest.toml")).unwrap());
        }
        assert_eq!(manifests[0], manifests[1], "{cmd}: 1 vs 3 threads");
        assert_eq!(manifests[0], manifests[2], "{cmd}: rerun");
    }
}
