//! Why the support has to be estimated per time step.
//!
//! Every trajectory starts in a small ball and then spends all later steps in
//! a distant one, so start states are a small minority of the pooled data. A
//! single estimator treats them as outliers; the time-0 estimator does not.

use dfr::ocsvm::OcsvmParams;
use dfr::support::{fit_pooled, fit_time_varying, make_failure_demo, FAILURE_START_CENTER};

fn main() -> dfr::Result<()> {
    let params = OcsvmParams::new(0.05, 5.0);
    let center = FAILURE_START_CENTER.to_vec();
    println!("{:>4} {:>12} {:>12}", "seed", "pooled", "per-step");
    for seed in 0..10 {
        let demos = make_failure_demo(20, 50, seed)?;
        let pooled = fit_pooled(&demos, &params, &[])?;
        let per_step = fit_time_varying(&demos, &params, &[])?;
        println!(
            "{seed:>4} {:>12.5} {:>12.5}",
            pooled.decision_value(&center)?,
            per_step.g(0, &center)?
        );
    }
    println!("negative means the start ball is judged outside the support");
    Ok(())
}
