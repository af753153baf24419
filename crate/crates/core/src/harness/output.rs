//! On-disk layout of experiment results.
//!
//! ```text
//! <out>/manifest.json        config, config hash, crate version, seeds, gate, timing
//! <out>/metrics.csv          one row per condition x demo count x trial x controller
//! <out>/pooled.csv           one row per condition x controller
//! <out>/records/<arm>.jsonl  one rollout per line
//! <out>/ascent_traces.csv    trace, seed, t, iteration, dfr, oracle
//! <out>/ascent_mean.csv      iteration, dfr, oracle
//! ```
//!
//! Everything except the `timing` object of the manifest is a pure function
//! of the inputs.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::experiments::{trial_demo_seed, ArmTiming, AscentResult, GateReport, MetricsRow, TableResult};
use crate::error::Result;
use crate::io::write_atomic;

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Seconds since the Unix epoch; only ever written under `timing`.
pub fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Manifest shared by all commands. `timing` holds every non-reproducible
/// value.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    inputs: serde_json::Value,
    outputs: &[String],
    gate: Option<&GateReport>,
    timing: serde_json::Value,
) -> Result<()> {
    let manifest = json!({
        "command": command,
        "crate_version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
        "outputs": outputs,
        "gate": gate,
        "timing": timing,
    });
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
}

fn config_inputs(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "config": cfg,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "trial_demo_seeds": (0..cfg.trials).map(|k| trial_demo_seed(cfg, k)).collect::<Vec<_>>(),
    })
}

fn timing_json(started: f64, arms: &[ArmTiming]) -> serde_json::Value {
    let finished = unix_time();
    json!({
        "started_unix_s": started,
        "finished_unix_s": finished,
        "wall_clock_s": finished - started,
        "arms": arms,
    })
}

/// Write a learning-curve or disturbance result. Returns the file names.
pub fn write_table_result(dir: &Path, command: &str, cfg: &ExperimentConfig, result: &TableResult, started: f64) -> Result<Vec<String>> {
    let mut outputs = vec!["metrics.csv".to_string(), "pooled.csv".to_string()];
    write_csv(&dir.join("metrics.csv"), &result.rows)?;
    write_csv::<MetricsRow>(&dir.join("pooled.csv"), &result.pooled)?;
    let mut arms: Vec<&str> = Vec::new();
    for r in &result.records {
        if !arms.contains(&r.arm.as_str()) {
            arms.push(&r.arm);
        }
    }
    for arm in arms {
        let name = format!("records/{arm}.jsonl");
        write_jsonl(&dir.join(&name), result.records.iter().filter(|r| r.arm == arm))?;
        outputs.push(name);
    }
    write_manifest(
        dir,
        command,
        config_inputs(cfg),
        &outputs,
        Some(&result.gate),
        timing_json(started, &result.timing),
    )?;
    Ok(outputs)
}

#[derive(Serialize)]
struct TraceRow {
    trace: usize,
    seed: u64,
    t: usize,
    iteration: usize,
    dfr: f64,
    oracle: f64,
}

#[derive(Serialize)]
struct MeanRow {
    iteration: usize,
    dfr: f64,
    oracle: f64,
}

pub fn write_ascent_result(dir: &Path, cfg: &ExperimentConfig, result: &AscentResult, started: f64) -> Result<Vec<String>> {
    let rows: Vec<TraceRow> = result
        .traces
        .iter()
        .flat_map(|tr| {
            tr.dfr.iter().zip(&tr.oracle).enumerate().map(move |(k, (&d, &o))| TraceRow {
                trace: tr.index,
                seed: tr.seed,
                t: tr.t,
                iteration: k,
                dfr: d,
                oracle: o,
            })
        })
        .collect();
    write_csv(&dir.join("ascent_traces.csv"), &rows)?;
    let mean: Vec<MeanRow> = result
        .mean_dfr
        .iter()
        .zip(&result.mean_oracle)
        .enumerate()
        .map(|(k, (&d, &o))| MeanRow { iteration: k, dfr: d, oracle: o })
        .collect();
    write_csv(&dir.join("ascent_mean.csv"), &mean)?;
    let outputs = vec!["ascent_traces.csv".to_string(), "ascent_mean.csv".to_string()];
    let mut inputs = config_inputs(cfg);
    inputs["rollouts_searched"] = json!(result.rollouts_searched);
    write_manifest(dir, "exp-ascent", inputs, &outputs, Some(&result.gate), timing_json(started, &[]))?;
    Ok(outputs)
}
