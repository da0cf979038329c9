use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pharmonic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pharmonic")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json on stderr");
    serde_json::from_str(line).unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn validate_echoes_the_resolved_config() {
    let o = pharmonic(&["validate", "n=64", "schedule.p=1.6,1.8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["grid.n"], "64");
    assert_eq!(v["config"]["schedule.p"], "1.6,1.8");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_values_exit_with_itemized_errors() {
    let o = pharmonic(&["validate", "schedule.p=2.5", "grid.n=3"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stderr_json(&o);
    assert_eq!(v["status"], "invalid-config");
    let keys: Vec<&str> = v["errors"].as_array().unwrap().iter().map(|e| e["key"].as_str().unwrap()).collect();
    assert!(keys.contains(&"schedule.p") && keys.contains(&"grid.n"), "{keys:?}");
}

#[test]
fn topology_conflict_is_rejected() {
    let o = pharmonic(&["validate", "experiment.name=torus-hodge", "boundary.kind=dirichlet"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stderr_json(&o);
    assert_eq!(v["errors"][0]["key"], "boundary.kind");
    assert!(v["errors"][0]["message"].as_str().unwrap().contains("topology conflict"));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ini");
    fs::write(&path, "[experiment]\nname = torus-diffuse\n\n[grid]\nn = 32\n").unwrap();
    let o = pharmonic(&["validate", "--config", path.to_str().unwrap(), "n=48"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["experiment.name"], "torus-diffuse");
    assert_eq!(v["config"]["grid.n"], "48");

    fs::write(&path, "[grid]\nwidth = 3\n").unwrap();
    let o = pharmonic(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["errors"][0]["key"], "grid.width");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(pharmonic(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pharmonic(&["run", "--seed", "x"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"").unwrap();
    let out = blocker.join("sub");
    let o = pharmonic(&["run", "--out", out.to_str().unwrap(), "experiment.name=torus-diffuse", "n=16"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["status"], "io-error");
}

#[test]
fn oracle_run_passes_and_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = pharmonic(&["oracle", "--out", dir.path().to_str().unwrap(), "n=64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["schema"], "pharmonic-summary/1");
    assert_eq!(s["experiment"], "oracle-suite");
    assert_eq!(s["results"]["all_pass"], true);
    for f in s["files"].as_array().unwrap() {
        assert!(dir.path().join(f.as_str().unwrap()).exists());
    }
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut other: Vec<_> = fs::read_dir(b).unwrap().map(|e| e.unwrap().file_name()).collect();
    other.sort();
    assert_eq!(names, other);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn runs_are_byte_reproducible() {
    let base = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["experiment.name=minmax-surface", "n=15", "rings=4", "angles=8"],
        &["experiment.name=disk-sweep", "n=16", "schedule.p=1.6,1.9", "init_noise=0.3", "seed=5"],
        &["experiment.name=torus-hodge", "n=16", "schedule.p=1.5,1.7,1.9"],
    ];
    for (i, case) in cases.iter().enumerate() {
        let a = base.path().join(format!("{i}a"));
        let b = base.path().join(format!("{i}b"));
        for (dir, threads) in [(&a, "1"), (&b, "3")] {
            let mut args = vec!["run", "--out", dir.to_str().unwrap(), "--threads", threads];
            args.extend_from_slice(case);
            let o = pharmonic(&args);
            assert_eq!(o.status.code(), Some(0), "{case:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        assert_same_outputs(&a, &b);
        let s = summary(&a);
        assert!(s.get("wall_time").is_none());
        assert!(!s["config"].as_object().unwrap().contains_key("experiment.out"));
    }
}

#[test]
fn seed_changes_a_noisy_run() {
    let base = tempfile::tempdir().unwrap();
    let mut energies = Vec::new();
    for seed in ["1", "2"] {
        let dir = base.path().join(seed);
        let o = pharmonic(&[
            "run",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
            "experiment.name=disk-sweep",
            "n=16",
            "schedule.p=1.8",
            "init_noise=0.5",
            "max_iterations=3",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let s = summary(&dir);
        energies.push(s["results"]["stages"][0]["solve"]["initial_energy"].as_f64().unwrap());
    }
    assert_ne!(energies[0], energies[1]);
}
