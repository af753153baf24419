mod common;

use common::{dfr, fixture, ok, run_pipeline, snapshot};
use dfr::ocsvm::OcsvmModel;
use dfr::trajectory::DemoSet;

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn support_bundle_has_one_point_per_demo_in_every_slice() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["demos", "--n", "120", "--out", "d.jsonl"]);
    ok(dir.path(), &["fit-support", "--demos", "d.jsonl", "--nu", "0.05", "--gamma", "5.0", "--out", "bundle"]);
    let demos = DemoSet::load(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(demos.len(), 120);
    for t in [0, demos.horizon / 2, demos.horizon - 1] {
        let m = OcsvmModel::load(dir.path().join(format!("bundle/slice_{t:03}.json"))).unwrap();
        assert_eq!(m.train_count, 120, "slice {t}");
    }
}

#[test]
fn repeated_rollout_writes_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["demos", "--n", "20", "--out", "d.jsonl"]);
    ok(p, &["fit-policy", "--demos", "d.jsonl", "--centers", "50", "--out", "pol.json"]);
    for out in ["a.jsonl", "b.jsonl"] {
        let o = ok(p, &["rollout", "--policy", "pol.json", "--controller", "baseline", "--seed", "7", "--out", out]);
        assert!(String::from_utf8_lossy(&o.stdout).contains("seed 7 baseline"));
    }
    let a = std::fs::read(p.join("a.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(p.join("b.jsonl")).unwrap());
}

#[test]
fn one_point_slice_is_rejected_with_its_index() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["demos", "--n", "3", "--out", "d.jsonl"]);
    // Cut two of the three trajectories short so that slices from 6 on hold
    // a single point.
    let mut demos = DemoSet::load(p.join("d.jsonl")).unwrap();
    for tr in demos.trajectories.iter_mut().skip(1) {
        tr.states.truncate(6);
        tr.controls.truncate(5);
    }
    DemoSet::new(demos.trajectories).unwrap().save(p.join("short.jsonl")).unwrap();
    let before = std::fs::read(p.join("short.jsonl")).unwrap();

    let out = dfr(p, &["fit-support", "--demos", "short.jsonl", "--out", "bundle"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("slice 6"), "{}", stderr(&out));
    assert!(!p.join("bundle").exists());
    assert_eq!(before, std::fs::read(p.join("short.jsonl")).unwrap(), "input was modified");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(dfr(p, &["fit-policy", "--demos", "missing.jsonl", "--out", "x"]).status.code(), Some(2));
    assert_eq!(dfr(p, &["demos", "--n", "0", "--out", "x"]).status.code(), Some(2));
    assert_eq!(dfr(p, &["demos", "--bogus-flag"]).status.code(), Some(2));

    ok(p, &["demos", "--n", "20", "--out", "d.jsonl"]);
    let out = dfr(p, &["fit-support", "--demos", "d.jsonl", "--max-solver-iters", "2", "--out", "b"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    std::fs::write(p.join("bad.toml"), "env = \"point_push\"\nseed = 1\n").unwrap();
    assert_eq!(dfr(p, &["exp-learning-curve", "--config", "bad.toml", "--out", "o"]).status.code(), Some(2));

    // Far too few rollouts for the gate.
    let lc = fixture("lc_small.toml");
    let out = dfr(p, &["exp-learning-curve", "--config", lc.to_str().unwrap(), "--out", "lc"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(p.join("lc/manifest.json").exists());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["demos", "--n", "20", "--out", "d.jsonl"]);
    std::fs::write(p.join("policy.toml"), "centers = 30\n").unwrap();
    let out = ok(p, &["fit-policy", "--demos", "d.jsonl", "--centers", "50", "--config", "policy.toml", "--out", "pol.json"]);
    // 30 radial features plus the linear block (6 states and a bias).
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("37 features"));

    std::fs::write(p.join("typo.toml"), "centres = 30\n").unwrap();
    let out = dfr(p, &["fit-policy", "--demos", "d.jsonl", "--config", "typo.toml", "--out", "pol.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("centres"));
}

#[test]
fn help_lists_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str])] = &[
        ("demos", &["--env", "--n", "--seed", "--out", "[default: 120]", "[default: point_push]"]),
        ("fit-support", &["--demos", "--nu", "--gamma", "--projection", "[default: 0.05]", "[default: 5]"]),
        ("fit-policy", &["--centers", "--bandwidth", "--ridge", "[default: 200]"]),
        ("rollout", &["--controller", "--lambda-mode", "--seed", "[default: 500]", "[default: manual]"]),
        ("exp-learning-curve", &["--config", "--out", "--jobs", "--no-gate"]),
        ("exp-ascent", &["--config", "--out", "--jobs"]),
        ("exp-disturbance", &["--config", "--out", "--jobs"]),
    ];
    for (cmd, needles) in cases {
        let text = String::from_utf8(ok(dir.path(), &[cmd, "--help"]).stdout).unwrap();
        for n in *needles {
            assert!(text.contains(n), "{cmd} --help lacks {n}:\n{text}");
        }
    }
}

#[test]
fn experiment_outputs_follow_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let lc = fixture("lc_small.toml");
    ok(p, &["exp-learning-curve", "--config", lc.to_str().unwrap(), "--out", "lc", "--no-gate"]);
    for f in ["manifest.json", "metrics.csv", "pooled.csv", "records/dfr.jsonl", "records/baseline.jsonl", "records/dfr_certified.jsonl"] {
        assert!(p.join("lc").join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p.join("lc/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"]["seed"], 11);
    assert_eq!(manifest["inputs"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["timing"]["wall_clock_s"].is_number());
    // 2 demo counts x 2 trials x 5 samples per arm.
    let lines = std::fs::read_to_string(p.join("lc/records/dfr.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 20);
    let header = std::fs::read_to_string(p.join("lc/metrics.csv")).unwrap();
    assert!(header.starts_with("condition,demo_count,trial,controller,rollouts,completed,halted,collided"));
}

#[test]
fn pipeline_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path(), "1");
    run_pipeline(b.path(), "4");
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}
