//! Scripted experts and demonstration generation.
//!
//! The PointPush expert walks the robot to a pre-push point behind the object
//! on the object-goal line, then pushes along that line, re-aiming every
//! step. The LineTrack expert advances open-loop along the line.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{
    self, clip_norm, norm, DisturbanceStream, EnvKind, EnvSpec, EnvState, Geometry, PushGeometry,
    PushState, Region, TrackState,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for, stream};
use crate::trajectory::{DemoSet, Outcome, Trajectory};

/// Extra gap kept between robot and object while approaching.
const APPROACH_GAP: f64 = 0.03;
/// Largest sideways error, as a fraction of the contact distance, tolerated
/// before the expert stops pushing and re-approaches.
const ALIGN_FRACTION: f64 = 0.25;

/// Optional Gaussian noise on demonstrations. Off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoJitter {
    /// Per-axis standard deviation added to every expert control.
    #[serde(default)]
    pub control_sigma: [f64; 2],
    /// Per-axis standard deviation of a tool offset applied before the first
    /// step (LineTrack only).
    #[serde(default)]
    pub start_sigma: [f64; 2],
}

impl DemoJitter {
    pub fn is_off(&self) -> bool {
        self.control_sigma == [0.0; 2] && self.start_sigma == [0.0; 2]
    }

    fn validate(&self) -> Result<()> {
        if self
            .control_sigma
            .iter()
            .chain(&self.start_sigma)
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(Error::invalid("jitter standard deviations must be >= 0"));
        }
        Ok(())
    }
}

fn v2(a: [f64; 2]) -> Vec<f64> {
    a.to_vec()
}

fn push_action(spec: &EnvSpec, g: &PushGeometry, s: &PushState) -> [f64; 2] {
    let to_goal = [s.goal[0] - s.object[0], s.goal[1] - s.object[1]];
    let remaining = norm(to_goal);
    if remaining <= g.supervisor_goal_tolerance {
        return [0.0, 0.0];
    }
    let n = [to_goal[0] / remaining, to_goal[1] / remaining];
    let contact = g.robot_radius + g.object_radius;
    let rel = [s.robot[0] - s.object[0], s.robot[1] - s.object[1]];
    let behind = -(rel[0] * n[0] + rel[1] * n[1]);
    let side = rel[0] * -n[1] + rel[1] * n[0];

    let aligned = side.abs() <= ALIGN_FRACTION * contact && behind > 0.0 && behind <= contact + APPROACH_GAP + 1e-9;
    if aligned {
        let step = spec.u_max.min(remaining);
        let aim = [
            s.object[0] - n[0] * (contact - step),
            s.object[1] - n[1] * (contact - step),
        ];
        return clip_norm([aim[0] - s.robot[0], aim[1] - s.robot[1]], spec.u_max);
    }

    let target = [
        s.object[0] - n[0] * (contact + APPROACH_GAP),
        s.object[1] - n[1] * (contact + APPROACH_GAP),
    ];
    let mut d = clip_norm([target[0] - s.robot[0], target[1] - s.robot[1]], spec.u_max);
    // Walk around the object instead of through it.
    let next = [s.robot[0] + d[0], s.robot[1] + d[1]];
    let clearance = contact + 0.01;
    let away = [next[0] - s.object[0], next[1] - s.object[1]];
    if norm(away) < clearance {
        let r = norm(rel).max(1e-12);
        let tangent = [-rel[1] / r, rel[0] / r];
        let sign = if tangent[0] * (target[0] - s.robot[0]) + tangent[1] * (target[1] - s.robot[1]) >= 0.0 {
            1.0
        } else {
            -1.0
        };
        let out = ((clearance - r).max(0.0)).min(spec.u_max);
        d = clip_norm(
            [
                sign * tangent[0] * spec.u_max + rel[0] / r * out,
                sign * tangent[1] * spec.u_max + rel[1] / r * out,
            ],
            spec.u_max,
        );
    }
    // Keep the approach path two robot radii clear of keep-out regions.
    let keep = 2.0 * g.robot_radius;
    for region in &spec.constraint_regions {
        if let Region::Circle { center, radius } = region {
            let next = [s.robot[0] + d[0], s.robot[1] + d[1]];
            let off = [next[0] - center[0], next[1] - center[1]];
            let dist = norm(off).max(1e-12);
            let short = radius + keep - dist;
            if short > 0.0 {
                d[0] += off[0] / dist * short;
                d[1] += off[1] / dist * short;
            }
        }
    }
    clip_norm(d, spec.u_max)
}

/// Expert control at `state`.
pub fn supervisor_action(spec: &EnvSpec, state: &EnvState) -> Result<Vec<f64>> {
    match (&spec.geometry, state) {
        (Geometry::PointPush(g), EnvState::PointPush(s)) => Ok(v2(push_action(spec, g, s))),
        (Geometry::LineTrack(g), EnvState::LineTrack(_)) => {
            Ok(v2(clip_norm([g.nominal_step, 0.0], spec.u_max)))
        }
        _ => Err(Error::invalid("state does not belong to this environment")),
    }
}

/// Expert control from a state vector.
pub fn supervisor_action_vector(spec: &EnvSpec, x: &[f64]) -> Result<Vec<f64>> {
    let state = match spec.kind() {
        EnvKind::PointPush => {
            crate::error::check_dim(6, x.len())?;
            EnvState::PointPush(PushState::from_vector(x))
        }
        EnvKind::LineTrack => {
            crate::error::check_dim(2, x.len())?;
            EnvState::LineTrack(TrackState::at(x[0], x[1]))
        }
    };
    supervisor_action(spec, &state)
}

/// One expert rollout over the full horizon. Controls after the goal is
/// reached are whatever the expert does there (zero for PointPush).
pub fn demonstrate(spec: &EnvSpec, seed: u64, jitter: &DemoJitter) -> Result<Trajectory> {
    let spec = spec.clone().with_disturbance(false);
    let mut state = envs::reset(&spec, seed);
    let mut rng = rng_for(seed, &[stream::JITTER]);
    if let EnvState::LineTrack(s) = &mut state {
        for i in 0..2 {
            if jitter.start_sigma[i] > 0.0 {
                s.tool[i] += Normal::new(0.0, jitter.start_sigma[i]).unwrap().sample(&mut rng);
            }
        }
    }
    let fail = |reason: String| Error::SupervisorFailure { seed, reason };
    if !envs::check_constraint(&spec, &state) {
        return Err(fail("start state violates a constraint".into()));
    }
    let mut states = vec![state.to_vector()];
    let mut controls = Vec::with_capacity(spec.horizon);
    let mut disturbance = DisturbanceStream::none();
    let mut reached = envs::goal_reached(&spec, &states[0]);
    for t in 0..spec.horizon {
        let mut u = supervisor_action(&spec, &state)?;
        for (i, ui) in u.iter_mut().enumerate() {
            let sigma = jitter.control_sigma[i];
            if sigma > 0.0 {
                *ui += Normal::new(0.0, sigma).unwrap().sample(&mut rng);
            }
        }
        let u = v2(clip_norm([u[0], u[1]], spec.u_max));
        let r = envs::step(&spec, &state, &u, &mut disturbance)?;
        if r.collided {
            return Err(fail(format!("constraint violated at step {}", t + 1)));
        }
        reached |= r.reached_goal;
        state = r.next_state;
        states.push(state.to_vector());
        controls.push(u);
    }
    if !reached {
        return Err(fail(format!("goal not reached within {} steps", spec.horizon)));
    }
    Ok(Trajectory {
        seed,
        states,
        controls,
        outcome: Outcome::Completed,
    })
}

/// `n` expert demonstrations with the disturbance off. Demonstration `k` is
/// seeded from `derive_seed(seed, [DEMOS, k])`. Any expert failure aborts.
pub fn generate_demos(spec: &EnvSpec, n: usize, seed: u64, jitter: &DemoJitter) -> Result<DemoSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one demonstration"));
    }
    jitter.validate()?;
    let trajectories = (0..n as u64)
        .into_par_iter()
        .map(|k| demonstrate(spec, derive_seed(seed, &[stream::DEMOS, k]), jitter))
        .collect::<Result<Vec<_>>>()?;
    let demos = DemoSet::new(trajectories)?;
    if spec.kind() == EnvKind::PointPush && n >= 2 {
        check_slice_variance(&demos)?;
    }
    Ok(demos)
}

fn check_slice_variance(demos: &DemoSet) -> Result<()> {
    for t in 0..=demos.horizon {
        let mut slice = demos.slice(t);
        let Some(first) = slice.next() else { continue };
        if slice.all(|x| x == first) {
            return Err(Error::invalid(format!(
                "demonstration slice {t} has zero variance in every coordinate"
            )));
        }
    }
    Ok(())
}

/// Uniform draw used by tests and tools that need a random admissible control.
pub fn random_control(rng: &mut impl Rng, u_max: f64) -> [f64; 2] {
    let r = u_max * rng.random::<f64>().sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    [r * theta.cos(), r * theta.sin()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_on_goal_means_stop() {
        let spec = EnvSpec::point_push();
        let s = PushState {
            robot: [0.5, 0.7],
            object: [0.5, 0.85],
            goal: [0.5, 0.85],
        };
        assert_eq!(
            supervisor_action(&spec, &EnvState::PointPush(s)).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn aligned_push_points_at_object() {
        let spec = EnvSpec::point_push();
        // Robot directly below the object, goal directly above: the expert
        // aims at `object - n (contact - u_max)`, which lies on the same line.
        let s = PushState {
            robot: [0.5, 0.3],
            object: [0.5, 0.4],
            goal: [0.5, 0.85],
        };
        let u = supervisor_action(&spec, &EnvState::PointPush(s)).unwrap();
        assert!(u[0].abs() < 1e-15);
        assert!(u[1] > 0.0);
        assert!((norm([u[0], u[1]]) - spec.u_max).abs() < 1e-12);
    }

    #[test]
    fn line_track_is_open_loop() {
        let spec = EnvSpec::line_track();
        for x in [[0.0, 0.0], [12.0, 1.5], [30.0, -2.0]] {
            assert_eq!(supervisor_action_vector(&spec, &x).unwrap(), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn point_push_demos_all_succeed() {
        let spec = EnvSpec::point_push();
        let demos = generate_demos(&spec, 120, 11, &DemoJitter::default()).unwrap();
        assert_eq!(demos.len(), 120);
        assert_eq!(demos.horizon, spec.horizon);
        for tr in &demos.trajectories {
            assert!(tr.states.iter().all(|x| !envs::violates(&spec, x)));
            assert!(envs::goal_reached(&spec, tr.states.last().unwrap()));
        }
    }

    #[test]
    fn line_track_demos_stay_on_the_line() {
        let spec = EnvSpec::line_track();
        let demos = generate_demos(&spec, 50, 2, &DemoJitter::default()).unwrap();
        for tr in &demos.trajectories {
            assert!(tr.states.iter().all(|x| x[1] == 0.0));
            assert!(tr.states.last().unwrap()[0] >= 40.0);
        }
    }

    #[test]
    fn demos_are_deterministic() {
        let spec = EnvSpec::point_push();
        let j = DemoJitter::default();
        assert_eq!(
            generate_demos(&spec, 5, 3, &j).unwrap(),
            generate_demos(&spec, 5, 3, &j).unwrap()
        );
    }

    #[test]
    fn broken_expert_is_a_hard_error() {
        // Put a keep-out region across the push corridor.
        let mut spec = EnvSpec::point_push();
        spec.constraint_regions.push(Region::Circle {
            center: [0.5, 0.6],
            radius: 0.05,
        });
        assert!(matches!(
            generate_demos(&spec, 3, 0, &DemoJitter::default()),
            Err(Error::SupervisorFailure { .. })
        ));
    }
}
