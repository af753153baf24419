//! Completion and collision rates against the number of demonstrations.
//!
//! cargo run --release --example learning_curve -- [config.toml]
//!
//! Defaults to `configs/learning_curve.toml`. Pass a copy with fewer trials
//! for a quick look.

use dfr::harness::{learning_curve_gate, run_learning_curve, ExperimentConfig};

fn main() -> dfr::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/learning_curve.toml").into());
    let cfg = ExperimentConfig::load(&path)?;
    let result = run_learning_curve(&cfg)?;

    let mut arms: Vec<&str> = Vec::new();
    for row in &result.rows {
        if !arms.contains(&row.controller.as_str()) {
            arms.push(&row.controller);
        }
    }
    print!("{:>6}", "demos");
    for arm in &arms {
        print!(" {:>20}", arm);
    }
    println!("\n{:>6} {}", "", "   completed/collided".repeat(arms.len()));
    for &n in &cfg.demo_counts {
        print!("{n:>6}");
        for arm in &arms {
            let (mut done, mut hit, mut total) = (0, 0, 0);
            for r in result.rows.iter().filter(|r| r.demo_count == n && r.controller == *arm) {
                done += r.completed;
                hit += r.collided;
                total += r.rollouts;
            }
            let f = |k: usize| k as f64 / total.max(1) as f64;
            print!(" {:>11.3}/{:<8.3}", f(done), f(hit));
        }
        println!();
    }

    let gate = learning_curve_gate(&result);
    for c in &gate.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
