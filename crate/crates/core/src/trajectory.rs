//! Trajectories, outcomes and line-delimited demonstration files.
//!
//! A demonstration file holds one JSON object per line with the fields
//! `seed`, `states`, `controls`, `outcome` in that order. `states` has one
//! more entry than `controls`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_text, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Halted,
    Collided,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Completed, Outcome::Halted, Outcome::Collided];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Halted => "halted",
            Outcome::Collided => "collided",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub trajectories: Vec<Trajectory>,
    pub horizon: usize,
    pub state_dim: usize,
}

impl DemoSet {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        let first = trajectories
            .first()
            .ok_or_else(|| Error::invalid("demonstration set is empty"))?;
        let state_dim = first
            .states
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("trajectory without states"))?;
        for (k, traj) in trajectories.iter().enumerate() {
            if traj.states.is_empty() {
                return Err(Error::invalid(format!("trajectory {k} has no states")));
            }
            if traj.controls.len() + 1 != traj.states.len() {
                return Err(Error::invalid(format!(
                    "trajectory {k}: {} states but {} controls",
                    traj.states.len(),
                    traj.controls.len()
                )));
            }
            for s in &traj.states {
                if s.len() != state_dim {
                    return Err(Error::DimensionMismatch {
                        expected: state_dim,
                        found: s.len(),
                    });
                }
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("trajectory {k} has a non-finite state")));
                }
            }
        }
        let horizon = trajectories.iter().map(|t| t.states.len() - 1).max().unwrap_or(0);
        Ok(DemoSet {
            trajectories,
            horizon,
            state_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// The first `n` trajectories.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        DemoSet::new(self.trajectories[..n.min(self.len())].to_vec())
    }

    /// States at time index `t` across trajectories long enough to have one.
    pub fn slice(&self, t: usize) -> impl Iterator<Item = &Vec<f64>> {
        self.trajectories.iter().filter_map(move |tr| tr.states.get(t))
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for traj in &self.trajectories {
            out.push_str(&serde_json::to_string(traj)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut trajectories = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let traj: Trajectory = serde_json::from_str(line)
                .map_err(|e| Error::invalid(format!("line {}: {e}", i + 1)))?;
            trajectories.push(traj);
        }
        DemoSet::new(trajectories)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_jsonl()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(&read_text(path.as_ref())?)
    }
}
