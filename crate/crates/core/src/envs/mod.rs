//! Quasi-static planar environments.
//!
//! Both environments come to rest after every step, and with the disturbance
//! off the state moves by at most `K * |u|`:
//!
//! * **PointPush**: a disc robot pushes a disc object to a goal disc past two
//!   circular keep-out regions. State vector `[rx, ry, ox, oy, gx, gy]`.
//! * **LineTrack**: a tool follows a line whose lateral offset can drift at
//!   test time. State vector `[progress, deviation]` in millimetres.

mod geometry;
mod line_track;
mod point_push;

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::io::read_text;
use crate::rng::{rng_for, stream};

pub use geometry::{clip_norm, dist, norm, Region};
pub use line_track::TrackState;
pub use point_push::PushState;

const POINT_PUSH_TOML: &str = include_str!("../../specs/point_push.toml");
const LINE_TRACK_TOML: &str = include_str!("../../specs/line_track.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PointPush,
    LineTrack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushGeometry {
    pub workspace_min: [f64; 2],
    pub workspace_max: [f64; 2],
    pub robot_radius: f64,
    pub object_radius: f64,
    pub robot_start_min: [f64; 2],
    pub robot_start_max: [f64; 2],
    pub object_start_min: [f64; 2],
    pub object_start_max: [f64; 2],
    /// The supervisor stops pushing once the object is this close to the
    /// goal centre.
    pub supervisor_goal_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackGeometry {
    /// Per-step advance of the open-loop supervisor along the line.
    pub nominal_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    PointPush(PushGeometry),
    LineTrack(TrackGeometry),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceProcess {
    #[default]
    None,
    /// The line offset drifts with a velocity that performs a random walk
    /// reflected inside `[-amplitude, amplitude]`. The disturbance clock runs
    /// with commanded motion: a step of length `|u|` lasts `|u| / u_max`.
    BoundedRandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub enabled: bool,
    pub amplitude: f64,
    pub process: DisturbanceProcess,
    /// Change of drift velocity per unit of disturbance time.
    #[serde(default)]
    pub volatility: f64,
    /// Seed-stream id mixed into the per-rollout disturbance seed.
    #[serde(default)]
    pub stream: u64,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        DisturbanceSpec {
            enabled: false,
            amplitude: 0.0,
            process: DisturbanceProcess::None,
            volatility: 0.0,
            stream: 0,
        }
    }
}

impl DisturbanceSpec {
    pub fn is_active(&self) -> bool {
        self.enabled && self.process != DisturbanceProcess::None && self.amplitude > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub state_dim: usize,
    pub control_dim: usize,
    /// Per-step cap on the control norm.
    pub u_max: f64,
    /// `K` in `|x_{t+1} - x_t| <= K |u_t|`.
    pub dyn_constant: f64,
    pub horizon: usize,
    pub geometry: Geometry,
    pub constraint_regions: Vec<Region>,
    pub goal: Region,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
}

impl EnvSpec {
    pub fn point_push() -> Self {
        Self::from_toml(POINT_PUSH_TOML).expect("bundled PointPush spec is valid")
    }

    pub fn line_track() -> Self {
        Self::from_toml(LINE_TRACK_TOML).expect("bundled LineTrack spec is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: EnvSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&read_text(path.as_ref())?)
    }

    /// Resolve `"point_push"` / `"line_track"` to the bundled specs, anything
    /// else as a path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "point_push" | "point-push" => Ok(Self::point_push()),
            "line_track" | "line-track" => Ok(Self::line_track()),
            path => Self::load(path),
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self.geometry {
            Geometry::PointPush(_) => EnvKind::PointPush,
            Geometry::LineTrack(_) => EnvKind::LineTrack,
        }
    }

    pub fn with_disturbance(mut self, enabled: bool) -> Self {
        self.disturbance.enabled = enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.u_max, "u_max")?;
        positive(self.dyn_constant, "dyn_constant")?;
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.control_dim != 2 {
            return Err(Error::invalid("both environments take planar controls"));
        }
        let (state_dim, min_k) = match self.kind() {
            EnvKind::PointPush => (6, 2.0),
            EnvKind::LineTrack => (2, 1.0),
        };
        check_dim(state_dim, self.state_dim)?;
        if self.dyn_constant < min_k {
            return Err(Error::invalid(format!(
                "dyn_constant {} is below the constructive bound {min_k}",
                self.dyn_constant
            )));
        }
        self.goal.validate()?;
        for region in &self.constraint_regions {
            region.validate()?;
            // Circular goals must be clear of every keep-out region. Half-plane
            // goals (LineTrack's progress line) necessarily cross the lateral
            // keep-out bands; collisions take precedence there.
            if let (
                Region::Circle { center: gc, radius: gr },
                Region::Circle { center, radius },
            ) = (&self.goal, region)
            {
                if dist(*gc, *center) <= gr + radius {
                    return Err(Error::invalid("goal overlaps a constraint region"));
                }
            }
        }
        let d = &self.disturbance;
        if !(d.amplitude >= 0.0 && d.volatility >= 0.0) {
            return Err(Error::invalid("disturbance amplitude and volatility must be >= 0"));
        }
        match &self.geometry {
            Geometry::PointPush(g) => {
                if !matches!(self.goal, Region::Circle { .. }) {
                    return Err(Error::invalid("PointPush needs a circular goal"));
                }
                positive(g.robot_radius, "robot_radius")?;
                positive(g.object_radius, "object_radius")?;
                for i in 0..2 {
                    if !(g.workspace_min[i] < g.workspace_max[i]
                        && g.object_start_min[i] <= g.object_start_max[i]
                        && g.robot_start_min[i] <= g.robot_start_max[i])
                    {
                        return Err(Error::invalid("empty workspace or start band"));
                    }
                }
                if d.enabled {
                    return Err(Error::invalid("PointPush has no disturbance process"));
                }
            }
            Geometry::LineTrack(g) => positive(g.nominal_step, "nominal_step")?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvState {
    PointPush(PushState),
    LineTrack(TrackState),
}

impl EnvState {
    pub fn to_vector(&self) -> Vec<f64> {
        match self {
            EnvState::PointPush(s) => s.to_vector(),
            EnvState::LineTrack(s) => s.to_vector(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    pub collided: bool,
    pub reached_goal: bool,
}

/// Random source for the exogenous disturbance of one rollout.
#[derive(Debug, Clone)]
pub struct DisturbanceStream {
    inner: Option<(ChaCha8Rng, f64)>,
}

impl DisturbanceStream {
    pub fn new(spec: &EnvSpec, seed: u64) -> Self {
        if !spec.disturbance.is_active() {
            return DisturbanceStream { inner: None };
        }
        let mut rng = rng_for(seed, &[stream::DISTURBANCE, spec.disturbance.stream]);
        let a = spec.disturbance.amplitude;
        let velocity = rng.random_range(-a..=a);
        DisturbanceStream {
            inner: Some((rng, velocity)),
        }
    }

    pub fn none() -> Self {
        DisturbanceStream { inner: None }
    }

    /// Advance by `dt` units of disturbance time; returns the offset increment.
    pub(crate) fn advance(&mut self, spec: &DisturbanceSpec, dt: f64) -> f64 {
        let Some((rng, velocity)) = self.inner.as_mut() else {
            return 0.0;
        };
        let a = spec.amplitude;
        let kick = rng.random_range(-1.0..=1.0) * spec.volatility * dt;
        let mut v = *velocity + kick;
        if v > a {
            v = 2.0 * a - v;
        } else if v < -a {
            v = -2.0 * a - v;
        }
        *velocity = v.clamp(-a, a);
        *velocity * dt
    }
}

pub fn reset(spec: &EnvSpec, seed: u64) -> EnvState {
    match &spec.geometry {
        Geometry::PointPush(g) => EnvState::PointPush(point_push::reset(spec, g, seed)),
        Geometry::LineTrack(_) => EnvState::LineTrack(TrackState::default()),
    }
}

pub fn step(
    spec: &EnvSpec,
    state: &EnvState,
    u: &[f64],
    disturbance: &mut DisturbanceStream,
) -> Result<StepResult> {
    check_dim(spec.control_dim, u.len())?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite control {u:?}")));
    }
    let u = clip_norm([u[0], u[1]], spec.u_max);
    let next_state = match (&spec.geometry, state) {
        (Geometry::PointPush(g), EnvState::PointPush(s)) => {
            EnvState::PointPush(point_push::step(g, s, u))
        }
        (Geometry::LineTrack(_), EnvState::LineTrack(s)) => {
            let dt = norm(u) / spec.u_max;
            let drift = disturbance.advance(&spec.disturbance, dt);
            EnvState::LineTrack(s.step(u, drift))
        }
        _ => return Err(Error::invalid("state does not belong to this environment")),
    };
    let v = next_state.to_vector();
    Ok(StepResult {
        collided: violates(spec, &v),
        reached_goal: goal_reached(spec, &v),
        next_state,
    })
}

/// True iff the state lies outside every constraint region.
pub fn check_constraint(spec: &EnvSpec, state: &EnvState) -> bool {
    !violates(spec, &state.to_vector())
}

/// Constraint violation evaluated on a state vector.
pub fn violates(spec: &EnvSpec, v: &[f64]) -> bool {
    match &spec.geometry {
        Geometry::PointPush(g) => point_push::violates(spec, g, v),
        Geometry::LineTrack(_) => {
            let p = [v[0], v[1]];
            spec.constraint_regions.iter().any(|r| r.contains(p))
        }
    }
}

/// Goal predicate on a state vector: the object centre inside the goal
/// region (PointPush) or progress past the goal line (LineTrack).
pub fn goal_reached(spec: &EnvSpec, v: &[f64]) -> bool {
    match spec.kind() {
        EnvKind::PointPush => spec.goal.contains([v[2], v[3]]),
        EnvKind::LineTrack => spec.goal.contains([v[0], v[1]]),
    }
}

pub fn dynamics_constant(spec: &EnvSpec) -> f64 {
    spec.dyn_constant
}

/// Outcome of applying one control through a [`Plant`].
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub collided: bool,
    pub reached_goal: bool,
}

/// A system that can only be driven forward by applying controls.
pub trait Plant {
    fn state_vector(&self) -> Vec<f64>;

    fn control_dim(&self) -> usize;

    fn apply(&mut self, u: &[f64]) -> Result<Transition>;

    /// A copy that can be stepped without affecting `self`. Only simulated
    /// plants support this.
    fn snapshot(&self) -> Result<Self>
    where
        Self: Sized,
    {
        Err(Error::Unsupported(
            "plant does not support snapshot/restore".into(),
        ))
    }
}

/// One running rollout of an environment.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    spec: &'a EnvSpec,
    state: EnvState,
    disturbance: DisturbanceStream,
}

impl<'a> Episode<'a> {
    pub fn new(spec: &'a EnvSpec, seed: u64) -> Self {
        Episode {
            spec,
            state: reset(spec, seed),
            disturbance: DisturbanceStream::new(spec, seed),
        }
    }

    pub fn from_state(spec: &'a EnvSpec, state: EnvState, disturbance: DisturbanceStream) -> Self {
        Episode {
            spec,
            state,
            disturbance,
        }
    }

    pub fn spec(&self) -> &'a EnvSpec {
        self.spec
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }
}

impl Plant for Episode<'_> {
    fn state_vector(&self) -> Vec<f64> {
        self.state.to_vector()
    }

    fn control_dim(&self) -> usize {
        self.spec.control_dim
    }

    fn apply(&mut self, u: &[f64]) -> Result<Transition> {
        let r = step(self.spec, &self.state, u, &mut self.disturbance)?;
        self.state = r.next_state;
        Ok(Transition {
            state: self.state.to_vector(),
            collided: r.collided,
            reached_goal: r.reached_goal,
        })
    }

    fn snapshot(&self) -> Result<Self> {
        Ok(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_load() {
        let p = EnvSpec::point_push();
        assert_eq!(p.kind(), EnvKind::PointPush);
        assert_eq!(p.state_dim, 6);
        assert_eq!(dynamics_constant(&p), 2.0);
        let l = EnvSpec::line_track();
        assert_eq!(l.kind(), EnvKind::LineTrack);
        assert_eq!(dynamics_constant(&l), 1.0);
        assert!(!l.disturbance.enabled);
    }

    #[test]
    fn reset_is_deterministic() {
        for spec in [EnvSpec::point_push(), EnvSpec::line_track()] {
            assert_eq!(reset(&spec, 17), reset(&spec, 17));
        }
        let p = EnvSpec::point_push();
        assert_ne!(reset(&p, 1), reset(&p, 2));
    }

    #[test]
    fn zero_control_leaves_state_unchanged() {
        for spec in [EnvSpec::point_push(), EnvSpec::line_track()] {
            let s = reset(&spec, 3);
            let r = step(&spec, &s, &[0.0, 0.0], &mut DisturbanceStream::none()).unwrap();
            assert_eq!(r.next_state, s);
        }
    }

    #[test]
    fn non_finite_control_is_rejected() {
        let spec = EnvSpec::point_push();
        let s = reset(&spec, 0);
        assert!(matches!(
            step(&spec, &s, &[f64::NAN, 0.0], &mut DisturbanceStream::none()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            step(&spec, &s, &[0.0], &mut DisturbanceStream::none()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn line_track_threshold_is_four_millimetres() {
        let spec = EnvSpec::line_track();
        let at = |dev: f64| EnvState::LineTrack(TrackState::at(10.0, dev));
        assert!(check_constraint(&spec, &at(3.9)));
        assert!(!check_constraint(&spec, &at(4.1)));
        assert!(!check_constraint(&spec, &at(-4.1)));
        assert!(!check_constraint(&spec, &at(4.0)));
    }

    #[test]
    fn disturbance_increment_is_bounded() {
        let spec = EnvSpec::line_track().with_disturbance(true);
        let mut d = DisturbanceStream::new(&spec, 5);
        for _ in 0..10_000 {
            let inc = d.advance(&spec.disturbance, 1.0);
            assert!(inc.abs() <= spec.disturbance.amplitude);
        }
    }

    #[test]
    fn plain_plants_refuse_snapshots() {
        struct Fixed;
        impl Plant for Fixed {
            fn state_vector(&self) -> Vec<f64> {
                vec![0.0]
            }
            fn control_dim(&self) -> usize {
                1
            }
            fn apply(&mut self, _: &[f64]) -> Result<Transition> {
                unreachable!()
            }
        }
        assert!(matches!(Fixed.snapshot(), Err(Error::Unsupported(_))));
    }
}
