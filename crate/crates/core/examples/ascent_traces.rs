//! Normalised margin during recovery: DFR against a finite-difference
//! gradient oracle started from the same states.
//!
//! cargo run --release --example ascent_traces -- [config.toml]

use dfr::harness::{run_ascent_traces, ExperimentConfig};

fn main() -> dfr::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/ascent.toml").into());
    let cfg = ExperimentConfig::load(&path)?;
    let result = run_ascent_traces(&cfg)?;
    println!(
        "{} activations from {} rollouts",
        result.traces.len(),
        result.rollouts_searched
    );
    println!("{:>5} {:>8} {:>8}", "iter", "dfr", "oracle");
    for k in [0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377] {
        if k < result.mean_dfr.len() {
            println!("{k:>5} {:>8.4} {:>8.4}", result.mean_dfr[k], result.mean_oracle[k]);
        }
    }
    println!("gate {}", if result.gate.passed { "passed" } else { "failed" });
    Ok(())
}
