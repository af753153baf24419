//! LineTrack with a drifting line the demonstrations never saw.
//!
//! cargo run --release --example disturbance -- [config.toml] [amplitude]

use dfr::harness::{run_disturbance_eval, ExperimentConfig};

fn main() -> dfr::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/disturbance.toml").into());
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(a) = args.next() {
        cfg.disturbance.amplitude = Some(a.parse().expect("amplitude"));
    }
    let result = run_disturbance_eval(&cfg)?;
    for row in &result.pooled {
        println!(
            "{:<12} {:<10} completed {:.3} [{:.3}, {:.3}]  collided {:.3} [{:.3}, {:.3}]",
            row.condition,
            row.controller,
            row.completed_frac,
            row.completed_lo,
            row.completed_hi,
            row.collided_frac,
            row.collided_lo,
            row.collided_hi
        );
    }
    println!("gate {}", if result.gate.passed { "passed" } else { "failed" });
    Ok(())
}
