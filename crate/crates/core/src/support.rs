//! Time-indexed support estimates over demonstrations.
//!
//! One one-class SVM per time step, trained only on the demonstration states
//! observed at that step, plus a pooled single-estimator variant for
//! comparison. A support bundle on disk is a directory holding
//! `slice_000.json`, `slice_001.json`, ... and a `manifest.json`.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_text, write_atomic};
use crate::ocsvm::{lipschitz_bound, train_ocsvm, OcsvmModel, OcsvmParams};
use crate::rng::{rng_for, stream};
use crate::trajectory::{DemoSet, Outcome, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingSupport {
    estimators: Vec<OcsvmModel>,
    projection: Vec<usize>,
    lipschitz: Vec<f64>,
    state_dim: usize,
    params: OcsvmParams,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleManifest {
    horizon: usize,
    state_dim: usize,
    projection: Vec<usize>,
    lipschitz: Vec<f64>,
    params: OcsvmParams,
}

fn resolve_projection(projection: &[usize], state_dim: usize) -> Result<Vec<usize>> {
    if projection.is_empty() {
        return Ok((0..state_dim).collect());
    }
    if let Some(&bad) = projection.iter().find(|&&i| i >= state_dim) {
        return Err(Error::invalid(format!(
            "projection index {bad} out of range for state dimension {state_dim}"
        )));
    }
    Ok(projection.to_vec())
}

fn project(x: &[f64], projection: &[usize]) -> Vec<f64> {
    projection.iter().map(|&i| x[i]).collect()
}

/// Train one estimator per time step `0..T`. An empty `projection` keeps
/// every coordinate.
pub fn fit_time_varying(
    demos: &DemoSet,
    params: &OcsvmParams,
    projection: &[usize],
) -> Result<TimeVaryingSupport> {
    params.validate()?;
    let projection = resolve_projection(projection, demos.state_dim)?;
    let horizon = demos.horizon.max(1);
    let slices: Vec<Vec<Vec<f64>>> = (0..horizon)
        .map(|t| demos.slice(t).map(|x| project(x, &projection)).collect())
        .collect();
    for (t, slice) in slices.iter().enumerate() {
        if slice.len() < 2 {
            return Err(Error::InsufficientData {
                slice: t,
                count: slice.len(),
            });
        }
    }
    let estimators = slices
        .par_iter()
        .map(|points| train_ocsvm(points, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeVaryingSupport::from_estimators(
        estimators,
        projection,
        demos.state_dim,
        *params,
    ))
}

/// One estimator on every projected state of every demonstration.
pub fn fit_pooled(demos: &DemoSet, params: &OcsvmParams, projection: &[usize]) -> Result<OcsvmModel> {
    params.validate()?;
    let projection = resolve_projection(projection, demos.state_dim)?;
    let points: Vec<Vec<f64>> = demos
        .trajectories
        .iter()
        .flat_map(|tr| tr.states.iter().map(|x| project(x, &projection)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            slice: 0,
            count: points.len(),
        });
    }
    train_ocsvm(&points, params)
}

impl TimeVaryingSupport {
    fn from_estimators(
        estimators: Vec<OcsvmModel>,
        projection: Vec<usize>,
        state_dim: usize,
        params: OcsvmParams,
    ) -> Self {
        let lipschitz = estimators.iter().map(lipschitz_bound).collect();
        TimeVaryingSupport {
            estimators,
            projection,
            lipschitz,
            state_dim,
            params,
        }
    }

    /// Number of estimators.
    pub fn horizon(&self) -> usize {
        self.estimators.len()
    }

    pub fn projection(&self) -> &[usize] {
        &self.projection
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn params(&self) -> &OcsvmParams {
        &self.params
    }

    /// Estimator used at time `t`; the last one is reused past the horizon.
    pub fn estimator(&self, t: usize) -> &OcsvmModel {
        &self.estimators[t.min(self.estimators.len() - 1)]
    }

    pub fn lipschitz(&self, t: usize) -> f64 {
        self.lipschitz[t.min(self.lipschitz.len() - 1)]
    }

    pub fn lipschitz_all(&self) -> &[f64] {
        &self.lipschitz
    }

    /// Decision value of the time-`t` estimator at state `x`.
    pub fn g(&self, t: usize, x: &[f64]) -> Result<f64> {
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                found: x.len(),
            });
        }
        self.estimator(t).decision_value(&project(x, &self.projection))
    }

    /// Fraction of states in `demos` classified inside the support of their
    /// own time step. Used to tune the kernel width on held-out supervisor
    /// trajectories.
    pub fn positive_rate(&self, demos: &DemoSet) -> Result<f64> {
        let mut inside = 0usize;
        let mut total = 0usize;
        for tr in &demos.trajectories {
            for (t, x) in tr.states.iter().enumerate() {
                total += 1;
                if self.g(t, x)? >= 0.0 {
                    inside += 1;
                }
            }
        }
        Ok(if total == 0 { 0.0 } else { inside as f64 / total as f64 })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (t, model) in self.estimators.iter().enumerate() {
            model.save(dir.join(format!("slice_{t:03}.json")))?;
        }
        let manifest = BundleManifest {
            horizon: self.horizon(),
            state_dim: self.state_dim,
            projection: self.projection.clone(),
            lipschitz: self.lipschitz.clone(),
            params: self.params,
        };
        write_atomic(
            &dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: BundleManifest =
            serde_json::from_str(&read_text(&dir.join("manifest.json"))?)?;
        if manifest.horizon == 0 {
            return Err(Error::invalid("support bundle has no slices"));
        }
        let estimators = (0..manifest.horizon)
            .map(|t| OcsvmModel::load(dir.join(format!("slice_{t:03}.json"))))
            .collect::<Result<Vec<_>>>()?;
        let projection = resolve_projection(&manifest.projection, manifest.state_dim)?;
        for m in &estimators {
            if m.dim() != projection.len() {
                return Err(Error::DimensionMismatch {
                    expected: projection.len(),
                    found: m.dim(),
                });
            }
        }
        Ok(Self::from_estimators(
            estimators,
            projection,
            manifest.state_dim,
            manifest.params,
        ))
    }
}

/// Centre of the start ball in [`make_failure_demo`].
pub const FAILURE_START_CENTER: [f64; 2] = [0.0, 0.0];
/// Centre of the ball every later state lies in.
pub const FAILURE_LATER_CENTER: [f64; 2] = [10.0, 0.0];
pub const FAILURE_BALL_RADIUS: f64 = 0.1;

fn sample_disc(rng: &mut impl Rng, center: [f64; 2], radius: f64) -> Vec<f64> {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    vec![center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Two-ball construction where the start states are a `1/(T+1)` minority of
/// the pooled data: each trajectory starts in a small ball and spends steps
/// `1..=T` in a distant one.
pub fn make_failure_demo(n_demos: usize, horizon: usize, seed: u64) -> Result<DemoSet> {
    if n_demos == 0 {
        return Err(Error::invalid("need at least one demonstration"));
    }
    if horizon < 20 {
        return Err(Error::invalid(format!("horizon must be >= 20, got {horizon}")));
    }
    let trajectories = (0..n_demos as u64)
        .map(|k| {
            let mut rng = rng_for(seed, &[stream::DEMOS, k]);
            let mut states = vec![sample_disc(&mut rng, FAILURE_START_CENTER, FAILURE_BALL_RADIUS)];
            for _ in 0..horizon {
                states.push(sample_disc(&mut rng, FAILURE_LATER_CENTER, FAILURE_BALL_RADIUS));
            }
            let controls = states
                .windows(2)
                .map(|w| vec![w[1][0] - w[0][0], w[1][1] - w[0][1]])
                .collect();
            Trajectory {
                seed: k,
                states,
                controls,
                outcome: Outcome::Completed,
            }
        })
        .collect();
    DemoSet::new(trajectories)
}
