use rand::Rng;
use rand_distr::StandardNormal;

use super::{DecisionSurface, SwitchingRule};
use crate::envs::{Plant, Transition};
use crate::error::{Error, Result};

/// One probe-and-step of derivative-free recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryStep {
    pub u_delta: Vec<f64>,
    pub u_recovery: Vec<f64>,
    pub g_before: f64,
    pub g_probe: f64,
    pub g_after: f64,
    pub flipped: bool,
    pub probe_transition: Transition,
    /// Transition after the recovery control. Equal to `probe_transition`
    /// when the probe itself ended the episode and no recovery was applied.
    pub transition: Transition,
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Apply a random probe of length `epsilon g / lambda`, keep its direction
/// if the margin went up and reverse it otherwise, then move `eta` along
/// that direction. Both controls go through the real plant; time does not
/// advance.
pub fn dfr_recovery_iteration<P, S, R>(
    plant: &mut P,
    rule: &SwitchingRule<S>,
    t: usize,
    rng: &mut R,
) -> Result<RecoveryStep>
where
    P: Plant,
    S: DecisionSurface + ?Sized,
    R: Rng + ?Sized,
{
    let x = plant.state_vector();
    let g_before = rule.margin(t, &x)?;
    if g_before <= 0.0 {
        return Err(Error::OutsideSupport { t, value: g_before });
    }
    let radius = rule.probe_radius(t, g_before);
    let dir = random_direction(rng, plant.control_dim());
    let u_delta: Vec<f64> = dir.iter().map(|d| d * radius).collect();
    let probe_transition = plant.apply(&u_delta)?;
    let g_probe = rule.margin(t, &probe_transition.state)?;
    let flipped = g_probe <= g_before;
    let sign = if flipped { -1.0 } else { 1.0 };
    let eta = rule.eta(t, g_before);

    if probe_transition.collided || probe_transition.reached_goal {
        return Ok(RecoveryStep {
            u_recovery: vec![0.0; u_delta.len()],
            u_delta,
            g_before,
            g_probe,
            g_after: g_probe,
            flipped,
            transition: probe_transition.clone(),
            probe_transition,
        });
    }
    let u_recovery: Vec<f64> = dir.iter().map(|d| sign * eta * d).collect();
    let transition = plant.apply(&u_recovery)?;
    let g_after = rule.margin(t, &transition.state)?;
    Ok(RecoveryStep {
        u_delta,
        u_recovery,
        g_before,
        g_probe,
        g_after,
        flipped,
        probe_transition,
        transition,
    })
}

/// Central-difference estimate of the margin gradient with respect to the
/// control, taken on snapshots of the plant, followed by a step of length
/// `eta` along it. Nothing is applied to `plant` itself.
pub fn finite_difference_oracle_step<P, S>(
    plant: &P,
    rule: &SwitchingRule<S>,
    t: usize,
) -> Result<Vec<f64>>
where
    P: Plant,
    S: DecisionSurface + ?Sized,
{
    let x = plant.state_vector();
    let g = rule.margin(t, &x)?;
    if g <= 0.0 {
        return Err(Error::OutsideSupport { t, value: g });
    }
    let delta = rule.probe_radius(t, g);
    let dim = plant.control_dim();
    let mut grad = vec![0.0; dim];
    for (i, gi) in grad.iter_mut().enumerate() {
        let probe = |s: f64| -> Result<f64> {
            let mut sim = plant.snapshot()?;
            let mut u = vec![0.0; dim];
            u[i] = s * delta;
            let tr = sim.apply(&u)?;
            rule.margin(t, &tr.state)
        };
        *gi = (probe(1.0)? - probe(-1.0)?) / (2.0 * delta);
    }
    let n = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Ok(vec![0.0; dim]);
    }
    let eta = rule.eta(t, g);
    Ok(grad.into_iter().map(|v| eta * v / n).collect())
}
