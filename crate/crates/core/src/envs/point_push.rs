use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{add, norm, scale, sub};
use super::{EnvSpec, PushGeometry, Region};
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushState {
    pub robot: [f64; 2],
    pub object: [f64; 2],
    pub goal: [f64; 2],
}

impl PushState {
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.robot[0],
            self.robot[1],
            self.object[0],
            self.object[1],
            self.goal[0],
            self.goal[1],
        ]
    }

    pub fn from_vector(v: &[f64]) -> Self {
        PushState {
            robot: [v[0], v[1]],
            object: [v[2], v[3]],
            goal: [v[4], v[5]],
        }
    }
}

pub(super) fn goal_center(spec: &EnvSpec) -> [f64; 2] {
    match spec.goal {
        Region::Circle { center, .. } => center,
        Region::HalfPlane { normal, offset } => scale(normal, offset),
    }
}

pub(super) fn reset(spec: &EnvSpec, g: &PushGeometry, seed: u64) -> PushState {
    let mut rng = rng_for(seed, &[stream::RESET]);
    let mut draw = |lo: [f64; 2], hi: [f64; 2]| {
        let mut p = [0.0; 2];
        for i in 0..2 {
            p[i] = if hi[i] > lo[i] { rng.random_range(lo[i]..hi[i]) } else { lo[i] };
        }
        p
    };
    let object = draw(g.object_start_min, g.object_start_max);
    let robot = draw(g.robot_start_min, g.robot_start_max);
    PushState {
        robot,
        object,
        goal: goal_center(spec),
    }
}

/// Move the robot (kept inside the workspace) and resolve contact with the
/// object by pushing it out along the centre line by the overlap depth.
pub(super) fn step(g: &PushGeometry, s: &PushState, u: [f64; 2]) -> PushState {
    let mut robot = add(s.robot, u);
    for i in 0..2 {
        robot[i] = robot[i].clamp(
            g.workspace_min[i] + g.robot_radius,
            g.workspace_max[i] - g.robot_radius,
        );
    }
    let contact = g.robot_radius + g.object_radius;
    let gap = sub(s.object, robot);
    let d = norm(gap);
    let mut object = s.object;
    if d < contact {
        let n = if d > 1e-12 {
            scale(gap, 1.0 / d)
        } else if norm(u) > 0.0 {
            scale(u, 1.0 / norm(u))
        } else {
            [0.0, 1.0]
        };
        object = add(object, scale(n, contact - d));
    }
    PushState {
        robot,
        object,
        goal: s.goal,
    }
}

pub(super) fn violates(spec: &EnvSpec, g: &PushGeometry, v: &[f64]) -> bool {
    let robot = [v[0], v[1]];
    let object = [v[2], v[3]];
    spec.constraint_regions.iter().any(|r| {
        r.touches_disc(robot, g.robot_radius) || r.touches_disc(object, g.object_radius)
    })
}

/// Whether robot and object discs overlap (beyond rounding).
#[cfg(test)]
pub(crate) fn overlapping(g: &PushGeometry, s: &PushState) -> bool {
    super::geometry::dist(s.robot, s.object) < g.robot_radius + g.object_radius - 1e-12
}

#[cfg(test)]
mod tests {
    use super::super::{check_constraint, reset as env_reset, step as env_step};
    use super::super::{DisturbanceStream, EnvState, Geometry};
    use super::*;

    fn geometry(spec: &EnvSpec) -> &PushGeometry {
        match &spec.geometry {
            Geometry::PointPush(g) => g,
            _ => unreachable!(),
        }
    }

    fn push(spec: &EnvSpec, s: PushState, u: [f64; 2]) -> PushState {
        match env_step(spec, &EnvState::PointPush(s), &u, &mut DisturbanceStream::none())
            .unwrap()
            .next_state
        {
            EnvState::PointPush(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn free_motion_leaves_object() {
        let spec = EnvSpec::point_push();
        let s = PushState {
            robot: [0.2, 0.2],
            object: [0.8, 0.2],
            goal: [0.5, 0.85],
        };
        let n = push(&spec, s, [0.05, 0.0]);
        assert!((n.robot[0] - 0.25).abs() < 1e-15 && n.robot[1] == 0.2);
        assert_eq!(n.object, s.object);
    }

    #[test]
    fn straight_push_moves_object_by_overlap_depth() {
        let spec = EnvSpec::point_push();
        let g = geometry(&spec);
        let contact = g.robot_radius + g.object_radius;
        // Robot touching the object from below; pushing up by 0.03 overlaps by 0.03.
        let s = PushState {
            robot: [0.5, 0.3],
            object: [0.5, 0.3 + contact],
            goal: [0.5, 0.85],
        };
        let n = push(&spec, s, [0.0, 0.03]);
        assert!((n.object[1] - (s.object[1] + 0.03)).abs() < 1e-12);
        assert!((n.object[0] - 0.5).abs() < 1e-15);
        assert!(!overlapping(g, &n));
    }

    #[test]
    fn resets_are_safe_and_in_band() {
        let spec = EnvSpec::point_push();
        let g = geometry(&spec);
        for seed in 0..1000 {
            let s = env_reset(&spec, seed);
            assert!(check_constraint(&spec, &s));
            let EnvState::PointPush(p) = s else { unreachable!() };
            assert!(!overlapping(g, &p));
            for i in 0..2 {
                assert!(p.object[i] >= g.object_start_min[i] && p.object[i] <= g.object_start_max[i]);
                assert!(p.robot[i] >= g.robot_start_min[i] && p.robot[i] <= g.robot_start_max[i]);
            }
        }
    }

    #[test]
    fn robot_on_red_region_is_a_violation() {
        let spec = EnvSpec::point_push();
        let Region::Circle { center, .. } = spec.constraint_regions[0] else {
            unreachable!()
        };
        let s = PushState {
            robot: center,
            object: [0.5, 0.3],
            goal: [0.5, 0.85],
        };
        assert!(!check_constraint(&spec, &EnvState::PointPush(s)));
        let s = PushState {
            robot: [0.5, 0.05],
            object: center,
            goal: [0.5, 0.85],
        };
        assert!(!check_constraint(&spec, &EnvState::PointPush(s)));
    }
}
