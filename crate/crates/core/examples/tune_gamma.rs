//! Pick the kernel width by the fraction of held-out supervisor states
//! that land inside the estimated support, and by support vector count.

use dfr::envs::EnvSpec;
use dfr::ocsvm::OcsvmParams;
use dfr::supervisor::{generate_demos, DemoJitter};
use dfr::support::fit_time_varying;

fn main() -> dfr::Result<()> {
    let spec = EnvSpec::point_push();
    let demos = generate_demos(&spec, 80, 1, &DemoJitter::default())?;
    let held_out = generate_demos(&spec, 40, 7, &DemoJitter::default())?;
    println!("{:>8} {:>10} {:>10} {:>10}", "gamma", "train in", "held in", "svs/slice");
    for gamma in [1.0, 5.0, 20.0, 50.0, 100.0, 200.0] {
        let support = fit_time_varying(&demos, &OcsvmParams::new(0.05, gamma), &[0, 1, 2, 3])?;
        let svs: usize = (0..support.horizon())
            .map(|t| support.estimator(t).support_vectors.len())
            .sum();
        println!(
            "{gamma:>8} {:>10.3} {:>10.3} {:>10.1}",
            support.positive_rate(&demos)?,
            support.positive_rate(&held_out)?,
            svs as f64 / support.horizon() as f64
        );
    }
    Ok(())
}
