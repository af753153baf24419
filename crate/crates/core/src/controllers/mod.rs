//! Switching controllers built on a learned policy and a time-indexed
//! support estimate.
//!
//! At every time step the learned policy's control `u` is applied only if the
//! support margin `g` at the current state exceeds `lambda * |u|`. Otherwise
//! the controller either recovers (derivative-free probing, or a
//! finite-difference oracle on simulator snapshots), halts (early stopping),
//! or ignores the check (baseline).

mod recovery;

use serde::{Deserialize, Serialize};

use crate::envs::{EnvSpec, Plant};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::support::TimeVaryingSupport;

pub use recovery::{dfr_recovery_iteration, finite_difference_oracle_step, RecoveryStep};

/// Time-indexed scalar field with a known Lipschitz bound per index.
pub trait DecisionSurface {
    fn value(&self, t: usize, x: &[f64]) -> Result<f64>;
    fn lipschitz(&self, t: usize) -> f64;
}

impl DecisionSurface for TimeVaryingSupport {
    fn value(&self, t: usize, x: &[f64]) -> Result<f64> {
        self.g(t, x)
    }

    fn lipschitz(&self, t: usize) -> f64 {
        TimeVaryingSupport::lipschitz(self, t)
    }
}

/// Anything that maps a state vector to a control.
pub trait ControlLaw {
    fn control(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl ControlLaw for Policy {
    fn control(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict(x)
    }
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> ControlLaw for F {
    fn control(&self, x: &[f64]) -> Result<Vec<f64>> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    #[default]
    Manual,
    /// `lambda_t = L_t * K` per slice.
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitchConfig {
    pub lambda: f64,
    /// Recovery step length. `None` means `0.5 (1 - epsilon) g / lambda`,
    /// recomputed every iteration. A fixed value is still capped at
    /// `(1 - epsilon) g / lambda`.
    pub eta: Option<f64>,
    /// Probe length as a fraction of `g / lambda`.
    pub epsilon: f64,
    pub max_recovery_iters: usize,
    pub lambda_mode: LambdaMode,
    /// Use `min(g_t, g_{t+1})` as the margin so that the state reached by the
    /// policy step is inside the next slice's support too. Always on in
    /// certified mode.
    pub guard_next_slice: bool,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig {
            lambda: 1.0,
            eta: None,
            epsilon: 0.1,
            max_recovery_iters: 500,
            lambda_mode: LambdaMode::Manual,
            guard_next_slice: false,
        }
    }
}

impl SwitchConfig {
    pub fn certified() -> Self {
        SwitchConfig {
            lambda_mode: LambdaMode::Certified,
            guard_next_slice: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::invalid(format!("eta must be positive, got {eta}")));
            }
        }
        Ok(())
    }

    fn guarded(&self) -> bool {
        self.guard_next_slice || self.lambda_mode == LambdaMode::Certified
    }
}

/// A [`DecisionSurface`] viewed through a [`SwitchConfig`]: resolves the
/// per-slice threshold coefficient and the margin that is actually tested.
#[derive(Clone, Copy)]
pub struct SwitchingRule<'a, S: ?Sized> {
    pub surface: &'a S,
    pub cfg: &'a SwitchConfig,
    /// Dynamics constant `K` of the plant.
    pub dyn_constant: f64,
    /// Per-step control cap of the plant; probe and recovery lengths are
    /// clipped to it.
    pub u_max: f64,
}

impl<'a, S: DecisionSurface + ?Sized> SwitchingRule<'a, S> {
    pub fn new(surface: &'a S, cfg: &'a SwitchConfig, spec: &EnvSpec) -> Self {
        SwitchingRule {
            surface,
            cfg,
            dyn_constant: spec.dyn_constant,
            u_max: spec.u_max,
        }
    }

    pub fn lambda(&self, t: usize) -> f64 {
        match self.cfg.lambda_mode {
            LambdaMode::Manual => self.cfg.lambda,
            LambdaMode::Certified => {
                let l = if self.cfg.guarded() {
                    self.surface.lipschitz(t).max(self.surface.lipschitz(t + 1))
                } else {
                    self.surface.lipschitz(t)
                };
                l * self.dyn_constant
            }
        }
    }

    pub fn margin(&self, t: usize, x: &[f64]) -> Result<f64> {
        let g = self.surface.value(t, x)?;
        if self.cfg.guarded() {
            Ok(g.min(self.surface.value(t + 1, x)?))
        } else {
            Ok(g)
        }
    }

    /// Recovery step length for margin `g`.
    pub fn eta(&self, t: usize, g: f64) -> f64 {
        let cap = (1.0 - self.cfg.epsilon) * g / self.lambda(t);
        let eta = match self.cfg.eta {
            None => 0.5 * cap,
            Some(eta) => eta.min(cap),
        };
        eta.min(self.u_max)
    }

    /// Probe length for margin `g`.
    pub fn probe_radius(&self, t: usize, g: f64) -> f64 {
        (self.cfg.epsilon * g / self.lambda(t)).min(self.u_max)
    }
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The switching test: recover when `g <= lambda * |u_hat|`.
pub fn should_recover(g: f64, u_hat: &[f64], lambda: f64) -> bool {
    g <= lambda * norm(u_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Baseline,
    #[serde(rename = "es")]
    EarlyStop,
    Dfr,
    Oracle,
    Supervisor,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Baseline => "baseline",
            ControllerKind::EarlyStop => "es",
            ControllerKind::Dfr => "dfr",
            ControllerKind::Oracle => "oracle",
            ControllerKind::Supervisor => "supervisor",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ControllerKind::Baseline),
            "es" | "early_stop" | "early-stop" => Ok(ControllerKind::EarlyStop),
            "dfr" => Ok(ControllerKind::Dfr),
            "oracle" => Ok(ControllerKind::Oracle),
            "supervisor" => Ok(ControllerKind::Supervisor),
            other => Err(Error::invalid(format!("unknown controller {other:?}"))),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything that happened during one outer time step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Margin at the state the step started from.
    pub margin: f64,
    /// Controls in the order they were applied.
    pub controls: Vec<Vec<f64>>,
    /// State after each applied control.
    pub states: Vec<Vec<f64>>,
    pub recoveries: Vec<RecoveryStep>,
    /// Recovery iterations run (DFR or oracle).
    pub iterations: usize,
    /// The time index advanced (the policy control was applied).
    pub advanced: bool,
    pub halted: bool,
    pub collided: bool,
    pub reached_goal: bool,
}

impl StepReport {
    fn push(&mut self, u: Vec<f64>, tr: crate::envs::Transition) {
        self.controls.push(u);
        self.states.push(tr.state);
        self.collided |= tr.collided;
        self.reached_goal |= tr.reached_goal;
    }

    fn finished(&self) -> bool {
        self.collided || self.reached_goal
    }
}

fn apply<P: Plant>(plant: &mut P, report: &mut StepReport, u: Vec<f64>) -> Result<()> {
    let tr = plant.apply(&u)?;
    report.push(u, tr);
    Ok(())
}

/// Learned policy, no support check.
pub fn baseline_controller<P: Plant, A: ControlLaw + ?Sized>(
    plant: &mut P,
    policy: &A,
) -> Result<StepReport> {
    let mut report = StepReport {
        margin: f64::NAN,
        advanced: true,
        ..Default::default()
    };
    let u = policy.control(&plant.state_vector())?;
    apply(plant, &mut report, u)?;
    Ok(report)
}

/// Learned policy while the switch stays off; halts for good the first time
/// it would switch.
pub fn early_stop_controller<P: Plant, S: DecisionSurface + ?Sized, A: ControlLaw + ?Sized>(
    plant: &mut P,
    rule: &SwitchingRule<S>,
    policy: &A,
    t: usize,
) -> Result<StepReport> {
    let x = plant.state_vector();
    let g = rule.margin(t, &x)?;
    let u = policy.control(&x)?;
    let mut report = StepReport {
        margin: g,
        ..Default::default()
    };
    if should_recover(g, &u, rule.lambda(t)) {
        report.halted = true;
    } else {
        report.advanced = true;
        apply(plant, &mut report, u)?;
    }
    Ok(report)
}

/// One outer step of the derivative-free recovery controller: recovery
/// iterations (which do not advance time) until the switch turns off, then
/// the learned policy's control. Halts after `max_recovery_iters` iterations.
pub fn dfr_controller_step<P, S, A, R>(
    plant: &mut P,
    rule: &SwitchingRule<S>,
    policy: &A,
    t: usize,
    rng: &mut R,
) -> Result<StepReport>
where
    P: Plant,
    S: DecisionSurface + ?Sized,
    A: ControlLaw + ?Sized,
    R: rand::Rng + ?Sized,
{
    recovering_step(plant, rule, policy, t, |plant, report| {
        let step = dfr_recovery_iteration(plant, rule, t, rng)?;
        report.push(step.u_delta.clone(), step.probe_transition.clone());
        if !report.finished() {
            report.push(step.u_recovery.clone(), step.transition.clone());
        }
        report.recoveries.push(step);
        Ok(())
    })
}

/// Same loop as [`dfr_controller_step`] with the recovery replaced by a
/// finite-difference gradient step computed on plant snapshots.
pub fn oracle_controller_step<P, S, A>(
    plant: &mut P,
    rule: &SwitchingRule<S>,
    policy: &A,
    t: usize,
) -> Result<StepReport>
where
    P: Plant,
    S: DecisionSurface + ?Sized,
    A: ControlLaw + ?Sized,
{
    recovering_step(plant, rule, policy, t, |plant, report| {
        let u = finite_difference_oracle_step(plant, rule, t)?;
        apply(plant, report, u)
    })
}

fn recovering_step<P, S, A, F>(
    plant: &mut P,
    rule: &SwitchingRule<S>,
    policy: &A,
    t: usize,
    mut recover: F,
) -> Result<StepReport>
where
    P: Plant,
    S: DecisionSurface + ?Sized,
    A: ControlLaw + ?Sized,
    F: FnMut(&mut P, &mut StepReport) -> Result<()>,
{
    let mut report = StepReport::default();
    let lambda = rule.lambda(t);
    let mut iterations = 0usize;
    loop {
        let x = plant.state_vector();
        let g = rule.margin(t, &x)?;
        if iterations == 0 {
            report.margin = g;
        }
        let u = policy.control(&x)?;
        if !should_recover(g, &u, lambda) {
            report.advanced = true;
            apply(plant, &mut report, u)?;
            return Ok(report);
        }
        if iterations >= rule.cfg.max_recovery_iters {
            report.halted = true;
            return Ok(report);
        }
        if g <= 0.0 {
            return Err(Error::OutsideSupport { t, value: g });
        }
        recover(plant, &mut report)?;
        iterations += 1;
        report.iterations = iterations;
        if report.finished() {
            return Ok(report);
        }
    }
}

#[cfg(test)]
mod tests;
