//! Behaviour cloning: ridge regression from states to controls on Gaussian
//! radial features, the raw state, and a bias.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::io::{read_text, write_atomic};
use crate::trajectory::DemoSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Number of feature centres, picked from the demonstration states.
    pub centers: usize,
    /// Length scale: features are `exp(-|x - c|^2 / (2 bandwidth^2))`.
    pub bandwidth: f64,
    pub ridge: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            centers: 200,
            bandwidth: 0.08,
            ridge: 1e-4,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.centers == 0 {
            return Err(Error::invalid("policy needs at least one centre"));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::invalid(format!("bad bandwidth {}", self.bandwidth)));
        }
        if !(self.ridge.is_finite() && self.ridge > 0.0) {
            return Err(Error::invalid(format!("bad ridge {}", self.ridge)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub centers: Vec<Vec<f64>>,
    pub bandwidth: f64,
    /// Row `j` holds the weights of feature `j` (see [`Policy::feature_count`]).
    pub weights: Vec<Vec<f64>>,
    pub ridge: f64,
    /// Outputs are clipped to this norm (the largest demonstrated control).
    pub u_max: f64,
    pub train_loss: f64,
}

/// Greedy farthest-point selection, starting from the first point.
fn farthest_points(points: &[&[f64]], k: usize) -> Vec<Vec<f64>> {
    let mut chosen = vec![points[0].to_vec()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq(p, points[0])).collect();
    while chosen.len() < k {
        let (idx, &far) = nearest
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if far <= 0.0 {
            break;
        }
        chosen.push(points[idx].to_vec());
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq(p, points[idx]));
        }
    }
    chosen
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Policy {
    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        let scale = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        for (o, c) in out.iter_mut().zip(&self.centers) {
            *o = (-sq(x, c) * scale).exp();
        }
        let k = self.centers.len();
        out[k..k + x.len()].copy_from_slice(x);
        out[k + x.len()] = 1.0;
    }

    /// Radial features, then the raw state coordinates, then a constant.
    pub fn feature_count(&self) -> usize {
        self.centers.len() + self.state_dim() + 1
    }

    pub fn state_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn control_dim(&self) -> usize {
        self.weights[0].len()
    }

    /// Regression output before clipping.
    pub fn raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.state_dim(), x.len())?;
        let mut phi = vec![0.0; self.feature_count()];
        self.features_into(x, &mut phi);
        let mut u = vec![0.0; self.control_dim()];
        for (f, row) in phi.iter().zip(&self.weights) {
            for (ui, w) in u.iter_mut().zip(row) {
                *ui += f * w;
            }
        }
        Ok(u)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.raw(x)?;
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > self.u_max {
            let s = self.u_max / n;
            u.iter_mut().for_each(|v| *v *= s);
        }
        Ok(u)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Policy = serde_json::from_str(&read_text(path.as_ref())?)?;
        if p.centers.is_empty() || p.weights.len() != p.feature_count() {
            return Err(Error::invalid("policy file has inconsistent shapes"));
        }
        Ok(p)
    }
}

/// Fit a policy to every state-control pair of the demonstrations.
pub fn fit_policy(demos: &DemoSet, config: &PolicyConfig) -> Result<Policy> {
    config.validate()?;
    let mut states: Vec<&[f64]> = Vec::new();
    let mut controls: Vec<&[f64]> = Vec::new();
    for tr in &demos.trajectories {
        for (x, u) in tr.states.iter().zip(&tr.controls) {
            states.push(x);
            controls.push(u);
        }
    }
    if states.is_empty() {
        return Err(Error::invalid("demonstrations contain no state-control pairs"));
    }
    let control_dim = controls[0].len();
    if let Some(u) = controls.iter().find(|u| u.len() != control_dim) {
        return Err(Error::DimensionMismatch {
            expected: control_dim,
            found: u.len(),
        });
    }
    let u_max = controls
        .iter()
        .map(|u| u.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    let centers = farthest_points(&states, config.centers);
    let width = centers.len() + states[0].len() + 1;
    let mut policy = Policy {
        centers,
        bandwidth: config.bandwidth,
        weights: vec![vec![0.0; control_dim]; width],
        ridge: config.ridge,
        u_max,
        train_loss: 0.0,
    };

    let n = states.len();
    let mut phi = DMatrix::<f64>::zeros(n, width);
    let mut row = vec![0.0; width];
    for (i, x) in states.iter().enumerate() {
        policy.features_into(x, &mut row);
        for (j, v) in row.iter().enumerate() {
            phi[(i, j)] = *v;
        }
    }
    let targets = DMatrix::from_fn(n, control_dim, |i, k| controls[i][k]);
    let gram = phi.transpose() * &phi;
    let rhs = phi.transpose() * targets;

    let mut ridge = config.ridge;
    let solution = loop {
        let mut a = gram.clone();
        for j in 0..width {
            a[(j, j)] += ridge;
        }
        if let Some(chol) = a.cholesky() {
            let w = chol.solve(&rhs);
            if w.iter().all(|v| v.is_finite()) {
                break w;
            }
        }
        if ridge > 1e6 {
            return Err(Error::invalid("normal equations stay singular"));
        }
        log::warn!("policy normal equations singular at ridge {ridge:e}; retrying with {:e}", ridge * 10.0);
        ridge *= 10.0;
    };
    policy.ridge = ridge;
    for j in 0..width {
        for k in 0..control_dim {
            policy.weights[j][k] = solution[(j, k)];
        }
    }
    policy.train_loss = empirical_loss(&policy, demos)?;
    Ok(policy)
}

/// Average over trajectories of the summed control error `|pi(x_t) - u_t|`.
pub fn empirical_loss(policy: &Policy, demos: &DemoSet) -> Result<f64> {
    if demos.is_empty() {
        return Err(Error::invalid("no demonstrations"));
    }
    let mut total = 0.0;
    for tr in &demos.trajectories {
        for (x, u) in tr.states.iter().zip(&tr.controls) {
            let p = policy.predict(x)?;
            check_dim(p.len(), u.len())?;
            let e = DVector::from_iterator(u.len(), p.iter().zip(u).map(|(a, b)| a - b));
            total += e.norm();
        }
    }
    Ok(total / demos.len() as f64)
}
