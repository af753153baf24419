use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{wilson_interval, Z_TWO_SIDED_95};
use super::RolloutRecord;
use crate::trajectory::Outcome;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub completed: usize,
    pub halted: usize,
    pub collided: usize,
}

impl OutcomeCounts {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Completed => self.completed += 1,
            Outcome::Halted => self.halted += 1,
            Outcome::Collided => self.collided += 1,
        }
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        self.completed += other.completed;
        self.halted += other.halted;
        self.collided += other.collided;
    }

    pub fn total(&self) -> usize {
        self.completed + self.halted + self.collided
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        match outcome {
            Outcome::Completed => self.completed,
            Outcome::Halted => self.halted,
            Outcome::Collided => self.collided,
        }
    }

    /// `(hits, total)` for the statistical tests.
    pub fn pair(&self, outcome: Outcome) -> (usize, usize) {
        (self.count(outcome), self.total())
    }

    pub fn fraction(&self, outcome: Outcome) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.count(outcome) as f64 / n as f64,
        }
    }

    /// Two-sided 95% Wilson interval.
    pub fn interval(&self, outcome: Outcome) -> (f64, f64) {
        wilson_interval(self.count(outcome), self.total(), Z_TWO_SIDED_95)
    }
}

impl FromIterator<Outcome> for OutcomeCounts {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut c = OutcomeCounts::default();
        for o in iter {
            c.add(o);
        }
        c
    }
}

/// Upper edges (exclusive) of the recovery-iteration histogram bins; the
/// last bin is open.
pub const RECOVERY_BIN_EDGES: [usize; 4] = [1, 10, 100, 500];

fn bin_label(i: usize) -> String {
    match i {
        0 => "0".to_string(),
        i if i < RECOVERY_BIN_EDGES.len() => {
            format!("{}-{}", RECOVERY_BIN_EDGES[i - 1], RECOVERY_BIN_EDGES[i] - 1)
        }
        _ => format!("{}+", RECOVERY_BIN_EDGES[RECOVERY_BIN_EDGES.len() - 1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub controller: String,
    pub counts: OutcomeCounts,
    pub completed_fraction: f64,
    pub halted_fraction: f64,
    pub collided_fraction: f64,
    pub mean_wall_clock_s: f64,
    /// Rollouts per bin of total recovery iterations.
    pub recovery_histogram: BTreeMap<String, usize>,
}

/// Per-controller outcome fractions, mean wall clock and recovery
/// histograms, in order of first appearance.
pub fn summarize(records: &[RolloutRecord]) -> Vec<ControllerSummary> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RolloutRecord>> = BTreeMap::new();
    for r in records {
        let key = r.controller.as_str();
        if !groups.contains_key(key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[key];
            let counts: OutcomeCounts = group.iter().map(|r| r.outcome).collect();
            let mut hist: BTreeMap<String, usize> = (0..=RECOVERY_BIN_EDGES.len()).map(|i| (bin_label(i), 0)).collect();
            for r in group {
                let bin = RECOVERY_BIN_EDGES
                    .iter()
                    .position(|&edge| r.recovery_iterations < edge)
                    .unwrap_or(RECOVERY_BIN_EDGES.len());
                *hist.get_mut(&bin_label(bin)).expect("all bins present") += 1;
            }
            ControllerSummary {
                controller: key.to_string(),
                completed_fraction: counts.fraction(Outcome::Completed),
                halted_fraction: counts.fraction(Outcome::Halted),
                collided_fraction: counts.fraction(Outcome::Collided),
                counts,
                mean_wall_clock_s: group.iter().map(|r| r.wall_clock_s).sum::<f64>() / group.len() as f64,
                recovery_histogram: hist,
            }
        })
        .collect()
}
