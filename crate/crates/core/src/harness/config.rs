use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controllers::{ControllerKind, SwitchConfig};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::io::read_text;
use crate::ocsvm::OcsvmParams;
use crate::policy::PolicyConfig;
use crate::supervisor::DemoJitter;

/// Support estimator settings as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportSection {
    pub nu: f64,
    pub gamma: f64,
    pub solver_tol: f64,
    pub max_solver_iters: usize,
}

impl Default for SupportSection {
    fn default() -> Self {
        let p = OcsvmParams::default();
        SupportSection {
            nu: p.nu,
            gamma: p.kernel.gamma,
            solver_tol: p.solver_tol,
            max_solver_iters: p.max_solver_iters,
        }
    }
}

impl SupportSection {
    pub fn params(&self) -> OcsvmParams {
        OcsvmParams {
            solver_tol: self.solver_tol,
            max_solver_iters: self.max_solver_iters,
            ..OcsvmParams::new(self.nu, self.gamma)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscentSection {
    /// Stop collecting once this many activations have been traced.
    pub activations: usize,
    /// Upper limit on the number of rollouts searched for activations.
    pub max_rollouts: usize,
}

impl Default for AscentSection {
    fn default() -> Self {
        AscentSection {
            activations: 60,
            max_rollouts: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceSection {
    /// Overrides for the environment's test-time disturbance.
    pub amplitude: Option<f64>,
    pub volatility: Option<f64>,
    /// Also evaluate every controller with the disturbance off.
    pub include_undisturbed: bool,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        DisturbanceSection {
            amplitude: None,
            volatility: None,
            include_undisturbed: true,
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in environment name or path to a spec file.
    pub env: String,
    pub seed: u64,
    /// Strictly increasing demonstration counts.
    pub demo_counts: Vec<usize>,
    pub trials: usize,
    /// Evaluation rollouts per controller, demo count and trial.
    pub eval_samples: usize,
    pub controllers: Vec<ControllerKind>,
    /// State coordinates seen by the support estimator; empty means all.
    #[serde(default)]
    pub projection: Vec<usize>,
    #[serde(default)]
    pub support: SupportSection,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub switch: SwitchConfig,
    #[serde(default)]
    pub jitter: DemoJitter,
    /// Also run DFR in certified mode and count support exits.
    #[serde(default)]
    pub certified_check: bool,
    #[serde(default)]
    pub ascent: AscentSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file. A relative `env` path that does not exist from
    /// the working directory is looked up next to the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&read_text(path)?)?;
        let env = Path::new(&cfg.env);
        if env.extension().is_some() && env.is_relative() && !env.exists() {
            if let Some(beside) = path.parent().map(|d| d.join(env)).filter(|p| p.exists()) {
                cfg.env = beside.to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.eval_samples == 0 {
            return Err(Error::invalid("eval_samples must be at least 1"));
        }
        if self.demo_counts.is_empty() {
            return Err(Error::invalid("demo_counts is empty"));
        }
        if self.demo_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("demo_counts must be strictly increasing"));
        }
        if self.controllers.is_empty() {
            return Err(Error::invalid("no controllers listed"));
        }
        self.support.params().validate()?;
        self.policy.validate()?;
        self.switch.validate()
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        EnvSpec::resolve(&self.env)
    }

    pub fn max_demos(&self) -> usize {
        *self.demo_counts.last().expect("validated non-empty")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        env = "point_push"
        seed = 3
        demo_counts = [20, 40]
        trials = 2
        eval_samples = 5
        controllers = ["baseline", "es", "dfr"]
    "#;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.support.nu, 0.05);
        assert_eq!(cfg.support.gamma, 5.0);
        assert_eq!(cfg.switch.max_recovery_iters, 500);
        assert_eq!(cfg.controllers[1], ControllerKind::EarlyStop);
        assert_eq!(cfg.max_demos(), 40);
        assert_eq!(cfg.hash(), cfg.clone().hash());
    }

    #[test]
    fn rejects_bad_grids() {
        let bad = MINIMAL.replace("[20, 40]", "[40, 40]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = MINIMAL.replace("trials = 2", "trials = 0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{MINIMAL}\nunknown_key = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
