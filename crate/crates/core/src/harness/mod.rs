//! Rollouts, outcome bookkeeping, statistics and the experiments.

mod config;
mod experiments;
pub mod output;
mod rollout;
pub mod stats;
mod summary;

pub use config::{AscentSection, DisturbanceSection, ExperimentConfig, SupportSection};
pub use experiments::*;
pub use rollout::{
    classify_outcome, classify_states, rollout, ControllerSetup, EndReason, RecoveryEvent,
    RolloutRecord, StepRecord,
};
pub use summary::{summarize, ControllerSummary, OutcomeCounts, RECOVERY_BIN_EDGES};
