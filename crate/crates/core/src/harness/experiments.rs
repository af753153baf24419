use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{rate_below_fraction_of, rate_exceeds_by, significantly_greater, OneSided};
use super::summary::OutcomeCounts;
use super::{rollout, ControllerSetup, EndReason, RolloutRecord};
use crate::controllers::{
    dfr_controller_step, dfr_recovery_iteration, finite_difference_oracle_step, should_recover,
    ControllerKind, LambdaMode, SwitchConfig, SwitchingRule,
};
use crate::envs::{EnvKind, EnvSpec, Episode, Plant};
use crate::error::{Error, Result};
use crate::policy::{fit_policy, Policy};
use crate::rng::{derive_seed, rng_for, stream};
use crate::supervisor::generate_demos;
use crate::support::{fit_time_varying, TimeVaryingSupport};
use crate::trajectory::{DemoSet, Outcome};

/// Margins below this count as leaving the support.
pub const SUPPORT_EXIT_TOL: f64 = 1e-9;

/// Label of the extra certified-mode DFR arm.
pub const CERTIFIED_ARM: &str = "dfr_certified";

/// A controller together with the switching settings it runs under.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub label: String,
    pub kind: ControllerKind,
    pub switch: SwitchConfig,
}

fn arms(cfg: &ExperimentConfig) -> Vec<Arm> {
    let mut arms: Vec<Arm> = cfg
        .controllers
        .iter()
        .map(|&kind| Arm {
            label: kind.as_str().to_string(),
            kind,
            switch: cfg.switch,
        })
        .collect();
    if cfg.certified_check {
        arms.push(Arm {
            label: CERTIFIED_ARM.to_string(),
            kind: ControllerKind::Dfr,
            switch: SwitchConfig {
                lambda_mode: LambdaMode::Certified,
                guard_next_slice: true,
                ..cfg.switch
            },
        });
    }
    arms
}

pub fn trial_demo_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(cfg.seed, &[stream::TRIAL, trial as u64, stream::DEMOS])
}

pub fn eval_seed(cfg: &ExperimentConfig, trial: usize, sample: usize) -> u64 {
    derive_seed(cfg.seed, &[stream::TRIAL, trial as u64, stream::EVAL, sample as u64])
}

/// Support estimate and cloned policy fitted on one demonstration set.
pub struct FittedModels {
    pub support: TimeVaryingSupport,
    pub policy: Policy,
}

pub fn fit_models(demos: &DemoSet, cfg: &ExperimentConfig) -> Result<FittedModels> {
    Ok(FittedModels {
        support: fit_time_varying(demos, &cfg.support.params(), &cfg.projection)?,
        policy: fit_policy(demos, &cfg.policy)?,
    })
}

/// Number of visited states whose margin under their own time slice is
/// below `-SUPPORT_EXIT_TOL`, and the smallest margin seen.
pub fn support_exits(record: &RolloutRecord, support: &TimeVaryingSupport) -> Result<(usize, f64)> {
    let mut exits = 0;
    let mut min_g = f64::INFINITY;
    for (t, x) in record.timed_states() {
        let g = support.g(t, x)?;
        min_g = min_g.min(g);
        if g < -SUPPORT_EXIT_TOL {
            exits += 1;
        }
    }
    Ok((exits, min_g))
}

/// A rollout tagged with the cell it belongs to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub arm: String,
    pub condition: String,
    pub demo_count: usize,
    pub trial: usize,
    pub record: RolloutRecord,
}

/// One row of a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub condition: String,
    pub demo_count: usize,
    /// Trial index, or `None` for rows pooled over trials.
    pub trial: Option<usize>,
    pub controller: String,
    pub rollouts: usize,
    pub completed: usize,
    pub halted: usize,
    pub collided: usize,
    pub completed_frac: f64,
    pub completed_lo: f64,
    pub completed_hi: f64,
    pub halted_frac: f64,
    pub halted_lo: f64,
    pub halted_hi: f64,
    pub collided_frac: f64,
    pub collided_lo: f64,
    pub collided_hi: f64,
    pub recovery_iterations: usize,
    pub support_exits: usize,
    /// Collision interval overlaps the baseline's in the same cell.
    pub overlaps_baseline: Option<bool>,
}

#[derive(Debug, Clone, Default)]
struct CellAccumulator {
    counts: OutcomeCounts,
    recovery_iterations: usize,
    support_exits: usize,
    wall_clock_s: f64,
}

fn make_row(condition: &str, demo_count: usize, trial: Option<usize>, arm: &str, acc: &CellAccumulator) -> MetricsRow {
    let c = &acc.counts;
    let (completed_lo, completed_hi) = c.interval(Outcome::Completed);
    let (halted_lo, halted_hi) = c.interval(Outcome::Halted);
    let (collided_lo, collided_hi) = c.interval(Outcome::Collided);
    MetricsRow {
        condition: condition.to_string(),
        demo_count,
        trial,
        controller: arm.to_string(),
        rollouts: c.total(),
        completed: c.completed,
        halted: c.halted,
        collided: c.collided,
        completed_frac: c.fraction(Outcome::Completed),
        completed_lo,
        completed_hi,
        halted_frac: c.fraction(Outcome::Halted),
        halted_lo,
        halted_hi,
        collided_frac: c.fraction(Outcome::Collided),
        collided_lo,
        collided_hi,
        recovery_iterations: acc.recovery_iterations,
        support_exits: acc.support_exits,
        overlaps_baseline: None,
    }
}

fn flag_overlaps(rows: &mut [MetricsRow]) {
    let baselines: Vec<(String, usize, Option<usize>, f64, f64)> = rows
        .iter()
        .filter(|r| r.controller == ControllerKind::Baseline.as_str())
        .map(|r| (r.condition.clone(), r.demo_count, r.trial, r.collided_lo, r.collided_hi))
        .collect();
    for row in rows.iter_mut() {
        if row.controller == ControllerKind::Baseline.as_str() {
            continue;
        }
        row.overlaps_baseline = baselines
            .iter()
            .find(|b| b.0 == row.condition && b.1 == row.demo_count && b.2 == row.trial)
            .map(|b| row.collided_lo <= b.4 && b.3 <= row.collided_hi);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<GateCheck>,
}

impl GateReport {
    fn new(name: &str, checks: Vec<GateCheck>) -> Self {
        GateReport {
            name: name.to_string(),
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

fn check(name: &str, passed: bool, detail: String) -> GateCheck {
    GateCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn describe(test: &OneSided) -> String {
    format!("estimate {:.4}, lower bound {:.4}", test.estimate, test.lower_bound)
}

/// Timing per arm, kept apart from the reproducible outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTiming {
    pub controller: String,
    pub rollouts: usize,
    pub mean_wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct TableResult {
    /// Per cell (condition, demo count, trial, arm).
    pub rows: Vec<MetricsRow>,
    /// Pooled over trials and demo counts, per condition and arm.
    pub pooled: Vec<MetricsRow>,
    pub records: Vec<CellRecord>,
    pub timing: Vec<ArmTiming>,
    pub gate: GateReport,
}

impl TableResult {
    pub fn pooled_counts(&self, condition: &str, arm: &str) -> Option<OutcomeCounts> {
        self.pooled
            .iter()
            .find(|r| r.condition == condition && r.controller == arm)
            .map(|r| OutcomeCounts {
                completed: r.completed,
                halted: r.halted,
                collided: r.collided,
            })
    }
}

struct Job<'a> {
    condition: &'a str,
    spec: &'a EnvSpec,
    demo_count: usize,
    trial: usize,
    arm: &'a Arm,
    models: &'a FittedModels,
    seed: u64,
}

fn run_jobs(jobs: &[Job], audit_support: bool) -> Result<Vec<(CellRecord, usize)>> {
    jobs.par_iter()
        .map(|job| {
            let setup = ControllerSetup {
                kind: job.arm.kind,
                support: Some(&job.models.support),
                policy: Some(&job.models.policy),
                switch: &job.arm.switch,
            };
            let record = rollout(job.spec, &setup, job.seed)?;
            let ran = record.end != EndReason::RejectedStart;
            let exits = if audit_support && ran && job.arm.kind == ControllerKind::Dfr {
                support_exits(&record, &job.models.support)?.0
            } else {
                0
            };
            Ok((
                CellRecord {
                    arm: job.arm.label.clone(),
                    condition: job.condition.to_string(),
                    demo_count: job.demo_count,
                    trial: job.trial,
                    record,
                },
                exits,
            ))
        })
        .collect()
}

fn tabulate(results: Vec<(CellRecord, usize)>, arms: &[Arm]) -> (Vec<MetricsRow>, Vec<MetricsRow>, Vec<CellRecord>, Vec<ArmTiming>) {
    // Keys kept in first-appearance order so tables follow the job order.
    let mut cells: Vec<((String, usize, usize, String), CellAccumulator)> = Vec::new();
    let mut pooled: Vec<((String, String), CellAccumulator)> = Vec::new();
    let mut records = Vec::with_capacity(results.len());
    for (cr, exits) in results {
        let key = (cr.condition.clone(), cr.demo_count, cr.trial, cr.arm.clone());
        let pkey = (cr.condition.clone(), cr.arm.clone());
        for acc in [
            upsert(&mut cells, key),
            upsert(&mut pooled, pkey),
        ] {
            acc.counts.add(cr.record.outcome);
            acc.recovery_iterations += cr.record.recovery_iterations;
            acc.support_exits += exits;
            acc.wall_clock_s += cr.record.wall_clock_s;
        }
        records.push(cr);
    }
    let mut rows: Vec<MetricsRow> = cells
        .iter()
        .map(|((cond, n, trial, arm), acc)| make_row(cond, *n, Some(*trial), arm, acc))
        .collect();
    flag_overlaps(&mut rows);
    let max_n = records.iter().map(|r| r.demo_count).max().unwrap_or(0);
    let mut pooled_rows: Vec<MetricsRow> = pooled
        .iter()
        .map(|((cond, arm), acc)| make_row(cond, max_n, None, arm, acc))
        .collect();
    flag_overlaps(&mut pooled_rows);
    let timing = arms
        .iter()
        .map(|arm| {
            let (n, total) = pooled
                .iter()
                .filter(|((_, a), _)| a == &arm.label)
                .fold((0, 0.0), |(n, t), (_, acc)| (n + acc.counts.total(), t + acc.wall_clock_s));
            ArmTiming {
                controller: arm.label.clone(),
                rollouts: n,
                mean_wall_clock_s: if n == 0 { 0.0 } else { total / n as f64 },
            }
        })
        .collect();
    (rows, pooled_rows, records, timing)
}

fn upsert<K: PartialEq, V: Default>(v: &mut Vec<(K, V)>, key: K) -> &mut V {
    let pos = match v.iter().position(|(k, _)| k == &key) {
        Some(p) => p,
        None => {
            v.push((key, V::default()));
            v.len() - 1
        }
    };
    &mut v[pos].1
}

/// Demonstrations for one trial (the largest count; smaller counts are
/// prefixes) and models fitted for every demo count.
fn fit_trials(spec: &EnvSpec, cfg: &ExperimentConfig, counts: &[usize]) -> Result<Vec<Vec<FittedModels>>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let max = *counts.last().expect("non-empty");
            let demos = generate_demos(spec, max, trial_demo_seed(cfg, trial), &cfg.jitter)?;
            counts
                .par_iter()
                .map(|&n| fit_models(&demos.prefix(n)?, cfg))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub const UNDISTURBED: &str = "undisturbed";
pub const DISTURBED: &str = "disturbed";

/// Outcome fractions for every demo count, trial and controller.
pub fn run_learning_curve(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let spec = cfg.env_spec()?.with_disturbance(false);
    let arms = arms(cfg);
    let models = fit_trials(&spec, cfg, &cfg.demo_counts)?;
    let mut jobs = Vec::new();
    for (trial, per_count) in models.iter().enumerate() {
        for (&n, m) in cfg.demo_counts.iter().zip(per_count) {
            for arm in &arms {
                for k in 0..cfg.eval_samples {
                    jobs.push(Job {
                        condition: UNDISTURBED,
                        spec: &spec,
                        demo_count: n,
                        trial,
                        arm,
                        models: m,
                        seed: eval_seed(cfg, trial, k),
                    });
                }
            }
        }
    }
    let results = run_jobs(&jobs, true)?;
    let (rows, pooled, records, timing) = tabulate(results, &arms);
    let mut result = TableResult {
        rows,
        pooled,
        records,
        timing,
        gate: GateReport::new("learning_curve", vec![]),
    };
    result.gate = learning_curve_gate(&result);
    Ok(result)
}

/// Minimum pooled DFR rollouts for the learning-curve gate.
pub const LEARNING_CURVE_MIN_ROLLOUTS: usize = 600;

pub fn learning_curve_gate(result: &TableResult) -> GateReport {
    let get = |arm: &str| result.pooled_counts(UNDISTURBED, arm);
    let mut checks = Vec::new();
    match (get("baseline"), get("dfr")) {
        (Some(b), Some(d)) => {
            checks.push(check(
                "enough_rollouts",
                d.total() >= LEARNING_CURVE_MIN_ROLLOUTS && b.total() >= LEARNING_CURVE_MIN_ROLLOUTS,
                format!("dfr {}, baseline {}", d.total(), b.total()),
            ));
            let t = rate_below_fraction_of(d.pair(Outcome::Collided), b.pair(Outcome::Collided), 0.5);
            checks.push(check(
                "dfr_collisions_at_most_half_baseline",
                t.passed,
                format!(
                    "dfr {:.4}, baseline {:.4}; {}",
                    d.fraction(Outcome::Collided),
                    b.fraction(Outcome::Collided),
                    describe(&t)
                ),
            ));
            let (dc, bc) = (d.fraction(Outcome::Completed), b.fraction(Outcome::Completed));
            checks.push(check(
                "dfr_completion_at_least_half_baseline",
                dc >= 0.5 * bc,
                format!("dfr {dc:.4}, baseline {bc:.4}"),
            ));
            if let Some(es) = get("es") {
                let t = significantly_greater(es.pair(Outcome::Collided), d.pair(Outcome::Collided));
                checks.push(check(
                    "es_collisions_not_above_dfr",
                    !t.passed,
                    format!(
                        "es {:.4}, dfr {:.4}; excess {}",
                        es.fraction(Outcome::Collided),
                        d.fraction(Outcome::Collided),
                        describe(&t)
                    ),
                ));
            }
        }
        _ => checks.push(check("arms_present", false, "needs baseline and dfr".into())),
    }
    if let Some(row) = result
        .pooled
        .iter()
        .find(|r| r.condition == UNDISTURBED && r.controller == CERTIFIED_ARM)
    {
        checks.push(check(
            "certified_no_support_exits",
            row.support_exits == 0,
            format!("{} exits over {} rollouts", row.support_exits, row.rollouts),
        ));
    }
    GateReport::new("learning_curve", checks)
}

/// LineTrack-style robustness test: train without disturbance, evaluate
/// with it (and optionally without it).
pub fn run_disturbance_eval(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let base = cfg.env_spec()?;
    if !matches!(base.kind(), EnvKind::LineTrack | EnvKind::PointPush) {
        return Err(Error::invalid("unknown environment kind"));
    }
    let train_spec = base.clone().with_disturbance(false);
    let mut test_spec = base.with_disturbance(true);
    if let Some(a) = cfg.disturbance.amplitude {
        test_spec.disturbance.amplitude = a;
    }
    if let Some(v) = cfg.disturbance.volatility {
        test_spec.disturbance.volatility = v;
    }
    test_spec.validate()?;
    let arms = arms(cfg);
    let n = cfg.max_demos();
    let models = fit_trials(&train_spec, cfg, &[n])?;
    let mut conditions = vec![(DISTURBED, &test_spec)];
    if cfg.disturbance.include_undisturbed {
        conditions.push((UNDISTURBED, &train_spec));
    }
    let mut jobs = Vec::new();
    for &(condition, spec) in &conditions {
        for (trial, m) in models.iter().enumerate() {
            for arm in &arms {
                for k in 0..cfg.eval_samples {
                    jobs.push(Job {
                        condition,
                        spec,
                        demo_count: n,
                        trial,
                        arm,
                        models: &m[0],
                        seed: eval_seed(cfg, trial, k),
                    });
                }
            }
        }
    }
    let results = run_jobs(&jobs, false)?;
    let (rows, pooled, records, timing) = tabulate(results, &arms);
    let mut result = TableResult {
        rows,
        pooled,
        records,
        timing,
        gate: GateReport::new("disturbance", vec![]),
    };
    result.gate = disturbance_gate(&result);
    Ok(result)
}

pub const DISTURBANCE_MIN_ROLLOUTS: usize = 300;

pub fn disturbance_gate(result: &TableResult) -> GateReport {
    let get = |arm: &str| result.pooled_counts(DISTURBED, arm);
    let mut checks = Vec::new();
    match (get("baseline"), get("dfr")) {
        (Some(b), Some(d)) => {
            checks.push(check(
                "enough_rollouts",
                d.total() >= DISTURBANCE_MIN_ROLLOUTS && b.total() >= DISTURBANCE_MIN_ROLLOUTS,
                format!("dfr {}, baseline {}", d.total(), b.total()),
            ));
            let t = rate_below_fraction_of(d.pair(Outcome::Collided), b.pair(Outcome::Collided), 0.33);
            checks.push(check(
                "dfr_collisions_at_most_third_baseline",
                t.passed,
                format!(
                    "dfr {:.4}, baseline {:.4}; {}",
                    d.fraction(Outcome::Collided),
                    b.fraction(Outcome::Collided),
                    describe(&t)
                ),
            ));
            let t = rate_exceeds_by(d.pair(Outcome::Completed), b.pair(Outcome::Completed), 0.1);
            checks.push(check(
                "dfr_completion_ten_points_above_baseline",
                t.passed,
                format!(
                    "dfr {:.4}, baseline {:.4}; {}",
                    d.fraction(Outcome::Completed),
                    b.fraction(Outcome::Completed),
                    describe(&t)
                ),
            ));
        }
        _ => checks.push(check("arms_present", false, "needs baseline and dfr".into())),
    }
    GateReport::new("disturbance", checks)
}

/// One recovery activation traced from the same state by DFR and by the
/// finite-difference oracle. Values are `min(1, g / (lambda |u_hat|))`,
/// floored at zero, one per iteration starting with the activation state
/// and padded with the final value to `max_recovery_iters + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub index: usize,
    pub seed: u64,
    pub t: usize,
    pub dfr: Vec<f64>,
    pub oracle: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub traces: Vec<AscentTrace>,
    pub mean_dfr: Vec<f64>,
    pub mean_oracle: Vec<f64>,
    pub rollouts_searched: usize,
    pub gate: GateReport,
}

fn normalized(rule: &SwitchingRule<TimeVaryingSupport>, policy: &Policy, t: usize, x: &[f64]) -> Result<f64> {
    let g = rule.margin(t, x)?;
    let threshold = rule.lambda(t) * policy.predict(x)?.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if g >= threshold { 1.0 } else { (g / threshold).clamp(0.0, 1.0) })
}

fn trace_recovery<F>(
    plant: &mut Episode,
    rule: &SwitchingRule<TimeVaryingSupport>,
    policy: &Policy,
    t: usize,
    mut iterate: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&mut Episode) -> Result<bool>,
{
    let cap = rule.cfg.max_recovery_iters;
    let mut values = vec![normalized(rule, policy, t, &plant.state_vector())?];
    while values.len() <= cap {
        let x = plant.state_vector();
        let g = rule.margin(t, &x)?;
        let u = policy.predict(&x)?;
        if !should_recover(g, &u, rule.lambda(t)) || g <= 0.0 {
            break;
        }
        let finished = iterate(plant)?;
        values.push(normalized(rule, policy, t, &plant.state_vector())?);
        if finished {
            break;
        }
    }
    let last = *values.last().expect("non-empty");
    values.resize(cap + 1, last);
    Ok(values)
}

/// Collect recovery activations from DFR rollouts and trace DFR and the
/// oracle from each activation state.
pub fn run_ascent_traces(cfg: &ExperimentConfig) -> Result<AscentResult> {
    cfg.validate()?;
    let spec = cfg.env_spec()?.with_disturbance(false);
    let models = &fit_trials(&spec, cfg, &[cfg.max_demos()])?[0][0];
    let rule = SwitchingRule::new(&models.support, &cfg.switch, &spec);
    let policy = &models.policy;
    let want = cfg.ascent.activations;

    // Rollouts are searched in parallel batches; activations are taken in
    // rollout order so the result does not depend on scheduling.
    let mut traces: Vec<AscentTrace> = Vec::new();
    let mut searched = 0;
    let batch = 64;
    while traces.len() < want && searched < cfg.ascent.max_rollouts {
        let end = (searched + batch).min(cfg.ascent.max_rollouts);
        let found: Vec<Vec<AscentTrace>> = (searched..end)
            .into_par_iter()
            .map(|k| {
                let seed = derive_seed(cfg.seed, &[stream::ASCENT, k as u64]);
                ascent_rollout(&spec, &rule, policy, seed)
            })
            .collect::<Result<_>>()?;
        for tr in found.into_iter().flatten() {
            if traces.len() < want {
                traces.push(AscentTrace { index: traces.len(), ..tr });
            }
        }
        searched = end;
    }
    let len = cfg.switch.max_recovery_iters + 1;
    let mean = |pick: fn(&AscentTrace) -> &Vec<f64>| -> Vec<f64> {
        (0..len)
            .map(|i| {
                if traces.is_empty() {
                    0.0
                } else {
                    traces.iter().map(|tr| pick(tr)[i]).sum::<f64>() / traces.len() as f64
                }
            })
            .collect()
    };
    let mean_dfr = mean(|t| &t.dfr);
    let mean_oracle = mean(|t| &t.oracle);
    let gate = ascent_gate(&traces, &mean_dfr, &mean_oracle, want);
    Ok(AscentResult {
        traces,
        mean_dfr,
        mean_oracle,
        rollouts_searched: searched,
        gate,
    })
}

/// Slack allowed on monotonicity and on the oracle-versus-DFR ordering.
pub const ASCENT_SLACK: f64 = 0.02;
/// A trace counts as reaching the threshold at this normalized value.
pub const ASCENT_REACH: f64 = 0.9;
pub const ASCENT_REACH_FRACTION: f64 = 0.8;

pub fn ascent_gate(traces: &[AscentTrace], mean_dfr: &[f64], mean_oracle: &[f64], want: usize) -> GateReport {
    let mut checks = vec![check(
        "enough_activations",
        traces.len() >= want.max(50),
        format!("{} activations", traces.len()),
    )];
    let mut running = f64::NEG_INFINITY;
    let mut worst_drop: f64 = 0.0;
    for &v in mean_dfr {
        running = running.max(v);
        worst_drop = worst_drop.max(running - v);
    }
    checks.push(check(
        "dfr_mean_nondecreasing",
        worst_drop <= ASCENT_SLACK,
        format!("largest drop below running max {worst_drop:.4}"),
    ));
    let reached = traces
        .iter()
        .filter(|t| t.dfr.iter().any(|&v| v >= ASCENT_REACH))
        .count();
    let frac = if traces.is_empty() { 0.0 } else { reached as f64 / traces.len() as f64 };
    checks.push(check(
        "dfr_traces_reach_threshold",
        frac >= ASCENT_REACH_FRACTION,
        format!("{reached}/{} traces reach {ASCENT_REACH}", traces.len()),
    ));
    let worst_gap = mean_dfr
        .iter()
        .zip(mean_oracle)
        .map(|(d, o)| d - o)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(check(
        "oracle_at_least_dfr",
        worst_gap <= ASCENT_SLACK,
        format!("largest dfr-minus-oracle gap {worst_gap:.4}"),
    ));
    GateReport::new("ascent", checks)
}

fn ascent_rollout(
    spec: &EnvSpec,
    rule: &SwitchingRule<TimeVaryingSupport>,
    policy: &Policy,
    seed: u64,
) -> Result<Vec<AscentTrace>> {
    let mut episode = Episode::new(spec, seed);
    let mut rng = rng_for(seed, &[stream::CONTROLLER]);
    let mut traces = Vec::new();
    if rule.surface.g(0, &episode.state_vector())? < 0.0 {
        return Ok(traces);
    }
    for t in 0..spec.horizon {
        let x = episode.state_vector();
        let g = rule.margin(t, &x)?;
        let u = policy.predict(&x)?;
        if g > 0.0 && should_recover(g, &u, rule.lambda(t)) {
            let mut trace_rng = rng_for(seed, &[stream::ASCENT, t as u64]);
            let mut dfr_plant = episode.clone();
            let dfr = trace_recovery(&mut dfr_plant, rule, policy, t, |p| {
                let s = dfr_recovery_iteration(p, rule, t, &mut trace_rng)?;
                Ok(s.transition.collided || s.transition.reached_goal)
            })?;
            let mut oracle_plant = episode.clone();
            let oracle = trace_recovery(&mut oracle_plant, rule, policy, t, |p| {
                let u = finite_difference_oracle_step(p, rule, t)?;
                let tr = p.apply(&u)?;
                Ok(tr.collided || tr.reached_goal)
            })?;
            traces.push(AscentTrace {
                index: 0,
                seed,
                t,
                dfr,
                oracle,
            });
        }
        let report = match dfr_controller_step(&mut episode, rule, policy, t, &mut rng) {
            Ok(r) => r,
            Err(Error::OutsideSupport { .. }) => break,
            Err(e) => return Err(e),
        };
        if report.collided || report.reached_goal || report.halted {
            break;
        }
    }
    Ok(traces)
}
