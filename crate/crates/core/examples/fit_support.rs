//! Fit a per-step support estimate to PointPush demonstrations and check it
//! on held-out supervisor trajectories.
//!
//! cargo run --release --example fit_support -- [n_demos] [gamma]

use dfr::envs::EnvSpec;
use dfr::ocsvm::OcsvmParams;
use dfr::supervisor::{generate_demos, DemoJitter};
use dfr::support::fit_time_varying;

fn main() -> dfr::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(120, |a| a.parse().expect("n_demos"));
    let gamma: f64 = args.next().map_or(50.0, |a| a.parse().expect("gamma"));

    let spec = EnvSpec::point_push();
    let demos = generate_demos(&spec, n, 1, &DemoJitter::default())?;
    let held_out = generate_demos(&spec, 50, 99, &DemoJitter::default())?;

    // Robot and object positions only; the goal coordinates never change.
    let support = fit_time_varying(&demos, &OcsvmParams::new(0.05, gamma), &[0, 1, 2, 3])?;

    println!("{n} demos, horizon {}, gamma {gamma}", support.horizon());
    println!("{:>4} {:>6} {:>10} {:>10}", "t", "svs", "rho", "lipschitz");
    for t in (0..support.horizon()).step_by(5) {
        let m = support.estimator(t);
        println!("{t:>4} {:>6} {:>10.5} {:>10.3}", m.support_vectors.len(), m.rho, support.lipschitz(t));
    }
    println!("training states inside:  {:.3}", support.positive_rate(&demos)?);
    println!("held-out states inside:  {:.3}", support.positive_rate(&held_out)?);
    Ok(())
}
