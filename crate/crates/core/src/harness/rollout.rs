use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    baseline_controller, dfr_controller_step, early_stop_controller, oracle_controller_step,
    ControllerKind, StepReport, SwitchConfig, SwitchingRule,
};
use crate::envs::{self, EnvSpec, Episode, Plant};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::{rng_for, stream};
use crate::supervisor::supervisor_action_vector;
use crate::support::TimeVaryingSupport;
use crate::trajectory::Outcome;

/// Why a rollout stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Goal,
    Collision,
    Horizon,
    /// Recovery cap reached, or early stopping triggered.
    Halt,
    /// The start state was already outside the estimated support.
    RejectedStart,
    /// Recovery was asked for at a non-positive margin.
    OutsideSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEvent {
    pub u_delta: Vec<f64>,
    pub u_recovery: Vec<f64>,
    pub g_before: f64,
    pub g_probe: f64,
    pub g_after: f64,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Support margin at the state the step started from (null for the
    /// baseline and the supervisor, which never evaluate it).
    pub g: Option<f64>,
    pub controls: Vec<Vec<f64>>,
    #[serde(default)]
    pub recovery_iterations: usize,
    /// The policy control was applied, so the last state belongs to `t + 1`.
    #[serde(default)]
    pub advanced: bool,
    /// State after each control.
    pub states: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recoveries: Vec<RecoveryEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub seed: u64,
    pub controller: ControllerKind,
    pub initial_state: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub end: EndReason,
    pub outcome: Outcome,
    pub recovery_iterations: usize,
    /// Not serialised, so that record files are reproducible byte for byte.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl RolloutRecord {
    /// Every state visited, starting with the initial one.
    pub fn visited_states(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.initial_state).chain(self.steps.iter().flat_map(|s| s.states.iter()))
    }

    pub fn time_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.advanced).count()
    }

    /// Every visited state paired with the time slice it belongs to.
    pub fn timed_states(&self) -> Vec<(usize, &[f64])> {
        let mut out = vec![(0, self.initial_state.as_slice())];
        for s in &self.steps {
            let last = s.states.len().saturating_sub(1);
            for (i, x) in s.states.iter().enumerate() {
                let t = if s.advanced && i == last { s.t + 1 } else { s.t };
                out.push((t, x.as_slice()));
            }
        }
        out
    }
}

/// Collided if any visited state violates a constraint; otherwise Completed
/// if any visited state meets the goal; otherwise Halted.
pub fn classify_outcome(record: &RolloutRecord, spec: &EnvSpec) -> Outcome {
    classify_states(record.visited_states().map(|v| v.as_slice()), spec)
}

pub fn classify_states<'a>(states: impl Iterator<Item = &'a [f64]>, spec: &EnvSpec) -> Outcome {
    let mut reached = false;
    for x in states {
        if envs::violates(spec, x) {
            return Outcome::Collided;
        }
        reached |= envs::goal_reached(spec, x);
    }
    if reached {
        Outcome::Completed
    } else {
        Outcome::Halted
    }
}

/// What a controller needs besides the plant.
#[derive(Clone, Copy)]
pub struct ControllerSetup<'a> {
    pub kind: ControllerKind,
    pub support: Option<&'a TimeVaryingSupport>,
    pub policy: Option<&'a Policy>,
    pub switch: &'a SwitchConfig,
}

fn step_record(t: usize, report: StepReport, with_margin: bool) -> StepRecord {
    StepRecord {
        t,
        g: with_margin.then_some(report.margin),
        recovery_iterations: report.iterations,
        advanced: report.advanced,
        controls: report.controls,
        states: report.states,
        recoveries: report
            .recoveries
            .into_iter()
            .map(|r| RecoveryEvent {
                u_delta: r.u_delta,
                u_recovery: r.u_recovery,
                g_before: r.g_before,
                g_probe: r.g_probe,
                g_after: r.g_after,
                flipped: r.flipped,
            })
            .collect(),
    }
}

/// Run one episode from the reset state for `seed` until goal, collision,
/// halt, or the horizon.
pub fn rollout(spec: &EnvSpec, setup: &ControllerSetup, seed: u64) -> Result<RolloutRecord> {
    let started = Instant::now();
    let mut episode = Episode::new(spec, seed);
    let mut rng = rng_for(seed, &[stream::CONTROLLER]);
    let kind = setup.kind;
    let needs_support = matches!(
        kind,
        ControllerKind::EarlyStop | ControllerKind::Dfr | ControllerKind::Oracle
    );
    let support = if needs_support {
        Some(setup.support.ok_or_else(|| Error::invalid(format!("{kind} needs a support estimate")))?)
    } else {
        None
    };
    let policy = if kind == ControllerKind::Supervisor {
        None
    } else {
        Some(setup.policy.ok_or_else(|| Error::invalid(format!("{kind} needs a policy")))?)
    };
    let initial_state = episode.state_vector();
    let mut steps = Vec::new();
    let mut end = EndReason::Horizon;

    let rejected = match support {
        Some(s) => s.g(0, &initial_state)? < 0.0,
        None => false,
    };
    if rejected {
        end = EndReason::RejectedStart;
    } else {
        for t in 0..spec.horizon {
            let report = match (kind, support, policy) {
                (ControllerKind::Supervisor, _, _) => {
                    let u = supervisor_action_vector(spec, &episode.state_vector())?;
                    let tr = episode.apply(&u)?;
                    StepReport {
                        margin: f64::NAN,
                        controls: vec![u],
                        collided: tr.collided,
                        reached_goal: tr.reached_goal,
                        states: vec![tr.state],
                        advanced: true,
                        ..Default::default()
                    }
                }
                (ControllerKind::Baseline, _, Some(p)) => baseline_controller(&mut episode, p)?,
                (k, Some(s), Some(p)) => {
                    let rule = SwitchingRule::new(s, setup.switch, spec);
                    let r = match k {
                        ControllerKind::EarlyStop => early_stop_controller(&mut episode, &rule, p, t),
                        ControllerKind::Dfr => dfr_controller_step(&mut episode, &rule, p, t, &mut rng),
                        _ => oracle_controller_step(&mut episode, &rule, p, t),
                    };
                    match r {
                        Ok(r) => r,
                        Err(Error::OutsideSupport { .. }) => {
                            end = EndReason::OutsideSupport;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                _ => unreachable!("requirements checked above"),
            };
            let (collided, reached, halted) = (report.collided, report.reached_goal, report.halted);
            steps.push(step_record(t, report, needs_support));
            if collided {
                end = EndReason::Collision;
                break;
            }
            if reached {
                end = EndReason::Goal;
                break;
            }
            if halted {
                end = EndReason::Halt;
                break;
            }
        }
    }
    let recovery_iterations = steps.iter().map(|s| s.recovery_iterations).sum();
    let mut record = RolloutRecord {
        seed,
        controller: kind,
        initial_state,
        steps,
        end,
        outcome: Outcome::Halted,
        recovery_iterations,
        wall_clock_s: 0.0,
    };
    record.outcome = classify_outcome(&record, spec);
    record.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(record)
}
