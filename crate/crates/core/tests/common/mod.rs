#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Run the binary in `dir`.
pub fn dfr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = dfr(dir, args);
    assert!(
        out.status.success(),
        "dfr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Every file under `root`, keyed by relative path. Manifests lose their
/// `timing` object.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let mut bytes = std::fs::read(&path).expect("readable file");
            if path.file_name().is_some_and(|n| n == "manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).expect("manifest is json");
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("timing");
                }
                bytes = serde_json::to_vec(&v).expect("json");
            }
            files.insert(path.strip_prefix(root).expect("under root").to_path_buf(), bytes);
        }
    }
    files
}

/// The full pipeline plus every experiment on the small fixtures, run into
/// `dir` with `jobs` rollout workers.
pub fn run_pipeline(dir: &Path, jobs: &str) {
    ok(dir, &["demos", "--n", "30", "--seed", "5", "--out", "demos.jsonl"]);
    ok(dir, &["demos", "--env", "line_track", "--n", "10", "--seed", "5", "--start-sigma", "0,1", "--out", "track.jsonl"]);
    ok(dir, &["fit-support", "--demos", "demos.jsonl", "--gamma", "50", "--projection", "0,1,2,3", "--out", "support"]);
    ok(dir, &["fit-policy", "--demos", "demos.jsonl", "--centers", "60", "--bandwidth", "0.15", "--out", "policy.json"]);
    for controller in ["baseline", "es", "dfr", "oracle", "supervisor"] {
        let out = format!("rollout_{controller}.jsonl");
        ok(
            dir,
            &["rollout", "--support", "support", "--policy", "policy.json", "--controller", controller, "--lambda", "0.15", "--seed", "7", "--out", &out],
        );
    }
    ok(
        dir,
        &["rollout", "--support", "support", "--policy", "policy.json", "--lambda-mode", "certified", "--seed", "7", "--out", "rollout_certified.jsonl"],
    );
    let lc = fixture("lc_small.toml");
    let asc = fixture("ascent_small.toml");
    let dist = fixture("dist_small.toml");
    ok(dir, &["exp-learning-curve", "--config", lc.to_str().unwrap(), "--out", "lc", "--jobs", jobs, "--no-gate"]);
    ok(dir, &["exp-ascent", "--config", asc.to_str().unwrap(), "--out", "ascent", "--jobs", jobs, "--no-gate"]);
    ok(dir, &["exp-disturbance", "--config", dist.to_str().unwrap(), "--out", "dist", "--jobs", jobs, "--no-gate"]);
}
