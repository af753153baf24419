//! Environments are plain TOML. Load the bundled PointPush spec, move a
//! keep-out disc, and check the scripted expert still succeeds.

use dfr::envs::{EnvSpec, Region};
use dfr::supervisor::{generate_demos, DemoJitter};
use dfr::trajectory::Outcome;

fn main() -> dfr::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/specs/point_push.toml");
    let mut spec = EnvSpec::load(path)?;
    spec.constraint_regions[0] = Region::Circle {
        center: [0.25, 0.6],
        radius: 0.06,
    };
    spec.validate()?;
    let demos = generate_demos(&spec, 30, 5, &DemoJitter::default())?;
    let done = demos
        .trajectories
        .iter()
        .filter(|t| t.outcome == Outcome::Completed)
        .count();
    println!("{done}/{} expert demonstrations completed", demos.len());
    println!("{}", toml::to_string(&spec).expect("spec serialises"));
    Ok(())
}
