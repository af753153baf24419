//! Command-line front end.
//!
//! Every command that takes parameters also accepts `--config FILE`, a TOML
//! table whose keys are the long flag names (dashes or underscores). Values
//! from the config file override flags, and flags override the built-in
//! defaults. The `exp-*` commands read the experiment config instead.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dfr::controllers::{ControllerKind, LambdaMode, SwitchConfig};
use dfr::envs::EnvSpec;
use dfr::harness::output::{unix_time, write_ascent_result, write_table_result};
use dfr::harness::{
    rollout, run_ascent_traces, run_disturbance_eval, run_learning_curve, ControllerSetup,
    ExperimentConfig, GateReport, TableResult,
};
use dfr::io::write_atomic;
use dfr::ocsvm::OcsvmParams;
use dfr::policy::{fit_policy, Policy, PolicyConfig};
use dfr::supervisor::{generate_demos, DemoJitter};
use dfr::support::{fit_time_varying, TimeVaryingSupport};
use dfr::trajectory::DemoSet;

const PRECEDENCE: &str = "\
Precedence: values in --config override flags, flags override defaults.
Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 solver did not converge, 4 experiment gate failed.";

#[derive(Parser)]
#[command(name = "dfr", version, about = "Support estimation and derivative-free recovery control", after_help = PRECEDENCE)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate expert demonstrations (one JSON trajectory per line).
    Demos(DemosArgs),
    /// Fit one support estimator per time step and write a bundle directory.
    FitSupport(FitSupportArgs),
    /// Fit the imitation policy by ridge regression.
    FitPolicy(FitPolicyArgs),
    /// Run a single episode and write its record.
    Rollout(RolloutArgs),
    /// Completion and collision rates against the number of demonstrations.
    ExpLearningCurve(ExpArgs),
    /// Recovery traces of DFR against the finite-difference oracle.
    ExpAscent(ExpArgs),
    /// Rates under a disturbance that was absent from the demonstrations.
    ExpDisturbance(ExpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DisturbanceArg {
    /// As set in the environment spec.
    Spec,
    On,
    Off,
}

impl DisturbanceArg {
    fn apply(self, spec: EnvSpec) -> EnvSpec {
        match self {
            DisturbanceArg::Spec => spec,
            DisturbanceArg::On => spec.with_disturbance(true),
            DisturbanceArg::Off => spec.with_disturbance(false),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct DemosArgs {
    /// Built-in environment (point_push, line_track) or path to a spec file.
    #[arg(long, default_value = "point_push")]
    env: String,
    /// Number of demonstrations.
    #[arg(long, default_value_t = 120)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-axis standard deviation of noise added to expert controls.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0])]
    control_sigma: Vec<f64>,
    /// Per-axis standard deviation of the LineTrack start offset.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0])]
    start_sigma: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DisturbanceArg::Spec)]
    disturbance: DisturbanceArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// TOML file overriding the flags above.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct FitSupportArgs {
    /// Demonstration file written by `demos`.
    #[arg(long)]
    demos: PathBuf,
    /// Upper bound on the training outlier fraction, in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    nu: f64,
    /// Gaussian kernel width: k(x, y) = exp(-gamma |x - y|^2).
    #[arg(long, default_value_t = 5.0)]
    gamma: f64,
    /// Comma-separated state coordinates to keep; empty keeps all.
    #[arg(long, value_delimiter = ',')]
    projection: Vec<usize>,
    /// Stopping tolerance on the dual optimality gap.
    #[arg(long, default_value_t = 1e-8)]
    solver_tol: f64,
    /// Iteration cap; reaching it is an error (exit code 3).
    #[arg(long, default_value_t = 1_000_000)]
    max_solver_iters: usize,
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// TOML file overriding the flags above.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct FitPolicyArgs {
    #[arg(long)]
    demos: PathBuf,
    /// Number of radial feature centres.
    #[arg(long, default_value_t = 200)]
    centers: usize,
    #[arg(long, default_value_t = 0.08)]
    bandwidth: f64,
    #[arg(long, default_value_t = 1e-4)]
    ridge: f64,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// TOML file overriding the flags above.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ControllerArg {
    Baseline,
    Es,
    Dfr,
    Oracle,
    Supervisor,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Baseline => ControllerKind::Baseline,
            ControllerArg::Es => ControllerKind::EarlyStop,
            ControllerArg::Dfr => ControllerKind::Dfr,
            ControllerArg::Oracle => ControllerKind::Oracle,
            ControllerArg::Supervisor => ControllerKind::Supervisor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LambdaModeArg {
    /// Use --lambda.
    Manual,
    /// Per-step Lipschitz bound times the dynamics constant; guards the next slice.
    Certified,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct RolloutArgs {
    #[arg(long, default_value = "point_push")]
    env: String,
    /// Support bundle directory (es, dfr, oracle).
    #[arg(long)]
    support: Option<PathBuf>,
    /// Policy file (every controller except the supervisor).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ControllerArg::Dfr)]
    controller: ControllerArg,
    #[arg(long, value_enum, default_value_t = LambdaModeArg::Manual)]
    lambda_mode: LambdaModeArg,
    /// Switching gain in manual mode.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Probe length as a fraction of g / lambda.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Fixed recovery step; adaptive when omitted.
    #[arg(long)]
    eta: Option<f64>,
    /// Recovery iterations allowed per time step before halting.
    #[arg(long, default_value_t = 500)]
    max_recovery_iters: usize,
    /// Also require the next slice's margin (always on in certified mode).
    #[arg(long)]
    guard_next_slice: bool,
    #[arg(long, value_enum, default_value_t = DisturbanceArg::Spec)]
    disturbance: DisturbanceArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record file (one JSON line); only the summary is printed when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file overriding the flags above.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct ExpArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Rollout worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the gate report but exit 0 even if it fails.
    #[arg(long)]
    no_gate: bool,
}

#[derive(Debug)]
struct GateFailed(String);

impl fmt::Display for GateFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gate {} failed", self.0)
    }
}

impl std::error::Error for GateFailed {}

#[derive(Debug)]
struct BadConfig(String);

impl fmt::Display for BadConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadConfig {}

/// Overlay the keys of a TOML file on parsed flags.
fn with_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut value = serde_json::to_value(&args)?;
    let fields = value.as_object_mut().expect("argument structs serialise to objects");
    for (key, v) in table {
        let key = key.replace('-', "_");
        if !fields.contains_key(&key) {
            return Err(BadConfig(format!("{}: unknown key {key:?}", path.display())).into());
        }
        fields.insert(key, serde_json::to_value(v)?);
    }
    serde_json::from_value(value).map_err(|e| BadConfig(format!("{}: {e}", path.display())).into())
}

fn pair(v: &[f64], flag: &str) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(BadConfig(format!("--{flag} takes two comma-separated values")).into()),
    }
}

fn cmd_demos(args: DemosArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let spec = args.disturbance.apply(EnvSpec::resolve(&args.env)?);
    let jitter = DemoJitter {
        control_sigma: pair(&args.control_sigma, "control-sigma")?,
        start_sigma: pair(&args.start_sigma, "start-sigma")?,
    };
    let demos = generate_demos(&spec, args.n, args.seed, &jitter)?;
    demos.save(&args.out)?;
    println!(
        "{} demonstrations, horizon {}, state dimension {} -> {}",
        demos.len(),
        demos.horizon,
        demos.state_dim,
        args.out.display()
    );
    Ok(())
}

fn cmd_fit_support(args: FitSupportArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let demos = DemoSet::load(&args.demos)?;
    let params = OcsvmParams {
        solver_tol: args.solver_tol,
        max_solver_iters: args.max_solver_iters,
        ..OcsvmParams::new(args.nu, args.gamma)
    };
    let support = fit_time_varying(&demos, &params, &args.projection)?;
    support.save(&args.out)?;
    let svs: usize = (0..support.horizon()).map(|t| support.estimator(t).support_vectors.len()).sum();
    println!(
        "{} slices, {} support vectors in total -> {}",
        support.horizon(),
        svs,
        args.out.display()
    );
    Ok(())
}

fn cmd_fit_policy(args: FitPolicyArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let demos = DemoSet::load(&args.demos)?;
    let cfg = PolicyConfig {
        centers: args.centers,
        bandwidth: args.bandwidth,
        ridge: args.ridge,
    };
    let policy = fit_policy(&demos, &cfg)?;
    policy.save(&args.out)?;
    println!(
        "{} features, training loss {:.6} -> {}",
        policy.feature_count(),
        policy.train_loss,
        args.out.display()
    );
    Ok(())
}

fn cmd_rollout(args: RolloutArgs) -> Result<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let spec = args.disturbance.apply(EnvSpec::resolve(&args.env)?);
    let support = args.support.as_ref().map(TimeVaryingSupport::load).transpose()?;
    let policy = args.policy.as_ref().map(Policy::load).transpose()?;
    let switch = SwitchConfig {
        lambda: args.lambda,
        eta: args.eta,
        epsilon: args.epsilon,
        max_recovery_iters: args.max_recovery_iters,
        lambda_mode: match args.lambda_mode {
            LambdaModeArg::Manual => LambdaMode::Manual,
            LambdaModeArg::Certified => LambdaMode::Certified,
        },
        guard_next_slice: args.guard_next_slice || args.lambda_mode == LambdaModeArg::Certified,
    };
    switch.validate()?;
    let setup = ControllerSetup {
        kind: args.controller.into(),
        support: support.as_ref(),
        policy: policy.as_ref(),
        switch: &switch,
    };
    let record = rollout(&spec, &setup, args.seed)?;
    if let Some(out) = &args.out {
        let mut line = serde_json::to_vec(&record)?;
        line.push(b'\n');
        write_atomic(out, &line)?;
    }
    println!(
        "seed {} {}: {} ({}) after {} steps, {} recovery iterations",
        record.seed,
        record.controller,
        record.outcome,
        serde_json::to_value(record.end)?.as_str().unwrap_or_default(),
        record.time_steps(),
        record.recovery_iterations
    );
    Ok(())
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!(BadConfig("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn print_gate(gate: &GateReport) {
    for c in &gate.checks {
        println!("  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    println!("gate {}: {}", gate.name, if gate.passed { "passed" } else { "FAILED" });
}

fn print_table(result: &TableResult) {
    println!(
        "{:<12} {:<14} {:>8} {:>10} {:>10} {:>10}",
        "condition", "controller", "rollouts", "completed", "collided", "halted"
    );
    for r in &result.pooled {
        println!(
            "{:<12} {:<14} {:>8} {:>10.3} {:>10.3} {:>10.3}",
            r.condition, r.controller, r.rollouts, r.completed_frac, r.collided_frac, r.halted_frac
        );
    }
}

fn finish_gate(gate: &GateReport, enforce: bool) -> Result<()> {
    print_gate(gate);
    if enforce && !gate.passed {
        return Err(GateFailed(gate.name.clone()).into());
    }
    Ok(())
}

fn cmd_table(args: ExpArgs, command: &str, run: fn(&ExperimentConfig) -> dfr::Result<TableResult>) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let started = unix_time();
    let result = thread_pool(args.jobs)?.install(|| run(&cfg))?;
    write_table_result(&args.out, command, &cfg, &result, started)?;
    print_table(&result);
    println!("results -> {}", args.out.display());
    finish_gate(&result.gate, !args.no_gate)
}

fn cmd_ascent(args: ExpArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let started = unix_time();
    let result = thread_pool(args.jobs)?.install(|| run_ascent_traces(&cfg))?;
    write_ascent_result(&args.out, &cfg, &result, started)?;
    println!(
        "{} traces from {} rollouts -> {}",
        result.traces.len(),
        result.rollouts_searched,
        args.out.display()
    );
    finish_gate(&result.gate, !args.no_gate)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<GateFailed>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<dfr::Error>() {
            return match e {
                dfr::Error::NotConverged { .. } => 3,
                dfr::Error::OutsideSupport { .. } | dfr::Error::SupervisorFailure { .. } => 1,
                _ => 2,
            };
        }
        if cause.is::<BadConfig>()
            || cause.is::<std::io::Error>()
            || cause.is::<toml::de::Error>()
            || cause.is::<serde_json::Error>()
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Demos(a) => cmd_demos(a),
        Command::FitSupport(a) => cmd_fit_support(a),
        Command::FitPolicy(a) => cmd_fit_policy(a),
        Command::Rollout(a) => cmd_rollout(a),
        Command::ExpLearningCurve(a) => cmd_table(a, "exp-learning-curve", run_learning_curve),
        Command::ExpAscent(a) => cmd_ascent(a),
        Command::ExpDisturbance(a) => cmd_table(a, "exp-disturbance", run_disturbance_eval),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Error types that embed their source in the message would
            // otherwise print it twice.
            let mut message = err.to_string();
            for cause in err.chain().skip(1) {
                let text = cause.to_string();
                if !message.contains(&text) {
                    message = format!("{message}: {text}");
                }
            }
            eprintln!("error: {message}");
            ExitCode::from(exit_code(&err))
        }
    }
}
