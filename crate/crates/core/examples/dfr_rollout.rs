//! One PointPush episode under the plain policy and under DFR, from the same
//! start. Prints each recovery DFR performs.
//!
//! cargo run --release --example dfr_rollout -- [seed]

use dfr::controllers::{ControllerKind, SwitchConfig};
use dfr::envs::EnvSpec;
use dfr::harness::{rollout, ControllerSetup};
use dfr::ocsvm::OcsvmParams;
use dfr::policy::{fit_policy, PolicyConfig};
use dfr::supervisor::{generate_demos, DemoJitter};
use dfr::support::fit_time_varying;

fn main() -> dfr::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(56, |a| a.parse().expect("seed"));
    let spec = EnvSpec::point_push();
    let demos = generate_demos(&spec, 40, 1, &DemoJitter::default())?;
    let support = fit_time_varying(&demos, &OcsvmParams::new(0.05, 50.0), &[0, 1, 2, 3])?;
    let policy = fit_policy(
        &demos,
        &PolicyConfig {
            centers: 400,
            bandwidth: 0.15,
            ridge: 1e-4,
        },
    )?;
    let switch = SwitchConfig {
        lambda: 0.15,
        ..Default::default()
    };

    for kind in [ControllerKind::Baseline, ControllerKind::Dfr] {
        let setup = ControllerSetup {
            kind,
            support: Some(&support),
            policy: Some(&policy),
            switch: &switch,
        };
        let record = rollout(&spec, &setup, seed)?;
        println!(
            "{kind}: {} after {} steps ({:?})",
            record.outcome,
            record.time_steps(),
            record.end
        );
        for step in record.steps.iter().filter(|s| s.recovery_iterations > 0) {
            let first = &step.recoveries[0];
            let last = step.recoveries.last().expect("non-empty");
            println!(
                "  t={:<3} {} recovery iterations, margin {:.4} -> {:.4}",
                step.t, step.recovery_iterations, first.g_before, last.g_after
            );
        }
    }
    Ok(())
}
