use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::envs::Transition;

#[derive(Clone)]
struct Identity {
    x: Vec<f64>,
}

impl Plant for Identity {
    fn state_vector(&self) -> Vec<f64> {
        self.x.clone()
    }
    fn control_dim(&self) -> usize {
        self.x.len()
    }
    fn apply(&mut self, u: &[f64]) -> Result<Transition> {
        for (a, b) in self.x.iter_mut().zip(u) {
            *a += b;
        }
        Ok(Transition {
            state: self.x.clone(),
            collided: false,
            reached_goal: false,
        })
    }
    fn snapshot(&self) -> Result<Self> {
        Ok(self.clone())
    }
}

struct NoSnapshot(Identity);

impl Plant for NoSnapshot {
    fn state_vector(&self) -> Vec<f64> {
        self.0.state_vector()
    }
    fn control_dim(&self) -> usize {
        self.0.control_dim()
    }
    fn apply(&mut self, u: &[f64]) -> Result<Transition> {
        self.0.apply(u)
    }
}

/// `g(x) = 1 - |x - c|`, 1-Lipschitz.
struct Radial {
    center: Vec<f64>,
}

impl DecisionSurface for Radial {
    fn value(&self, _t: usize, x: &[f64]) -> Result<f64> {
        Ok(1.0 - norm(&x.iter().zip(&self.center).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }
    fn lipschitz(&self, _t: usize) -> f64 {
        1.0
    }
}

struct Plateau;

impl DecisionSurface for Plateau {
    fn value(&self, _t: usize, _x: &[f64]) -> Result<f64> {
        Ok(0.1)
    }
    fn lipschitz(&self, _t: usize) -> f64 {
        1.0
    }
}

fn rule<'a, S: DecisionSurface>(surface: &'a S, cfg: &'a SwitchConfig) -> SwitchingRule<'a, S> {
    SwitchingRule {
        surface,
        cfg,
        dyn_constant: 1.0,
        u_max: f64::INFINITY,
    }
}

fn radial() -> Radial {
    Radial {
        center: vec![0.0, 0.0],
    }
}

fn constant(u: Vec<f64>) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
    move |_| Ok(u.clone())
}

#[test]
fn switching_inequality() {
    assert!(!should_recover(1.0, &[0.3, 0.4], 1.0));
    assert!(should_recover(0.4, &[0.3, 0.4], 1.0));
    assert!(!should_recover(0.1, &[0.0, 0.0], 1.0));
    assert!(should_recover(0.5, &[0.3, 0.4], 1.0));
}

#[test]
fn probe_and_recovery_lengths() {
    let surface = radial();
    let cfg = SwitchConfig {
        lambda: 2.0,
        ..Default::default()
    };
    let rule = rule(&surface, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..500 {
        let r = 0.05 + 0.9 * (k as f64 / 500.0);
        let mut plant = Identity {
            x: vec![r, 0.0],
        };
        let step = dfr_recovery_iteration(&mut plant, &rule, 0, &mut rng).unwrap();
        let g = step.g_before;
        assert!((norm(&step.u_delta) - 0.1 * g / 2.0).abs() < 1e-12);
        let cap = (0.9 * g / 2.0).min(0.5 * 0.9 * g / 2.0);
        assert!((norm(&step.u_recovery) - cap).abs() < 1e-12);
        assert!(norm(&step.u_delta) + norm(&step.u_recovery) <= g / 2.0 + 1e-15);
        assert_eq!(step.flipped, step.g_probe <= step.g_before);
    }
}

#[test]
fn magnitudes_vanish_at_the_boundary() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let mut plant = Identity {
        x: vec![1.0 - 1e-9, 0.0],
    };
    let step = dfr_recovery_iteration(&mut plant, &rule, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(norm(&step.u_delta) < 1e-9 && norm(&step.u_recovery) < 1e-9);
}

#[test]
fn recovery_climbs_on_average() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = 0.0;
    let n = 4000;
    for _ in 0..n {
        let mut plant = Identity {
            x: vec![0.0, 0.8],
        };
        let step = dfr_recovery_iteration(&mut plant, &rule, 0, &mut rng).unwrap();
        total += step.g_after - step.g_before;
    }
    assert!(total / n as f64 > 0.0);
}

#[test]
fn certified_recovery_never_leaves_support() {
    let surface = radial();
    let cfg = SwitchConfig::certified();
    let rule = rule(&surface, &cfg);
    assert_eq!(rule.lambda(0), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..200 {
        let theta = k as f64;
        let mut plant = Identity {
            x: vec![0.999 * theta.cos(), 0.999 * theta.sin()],
        };
        for _ in 0..50 {
            let step = dfr_recovery_iteration(&mut plant, &rule, 0, &mut rng).unwrap();
            assert!(step.g_probe >= 0.0 && step.g_after >= 0.0);
        }
    }
}

#[test]
fn outside_support_is_an_error() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let mut plant = Identity {
        x: vec![2.0, 0.0],
    };
    assert!(matches!(
        dfr_recovery_iteration(&mut plant, &rule, 0, &mut ChaCha8Rng::seed_from_u64(0)),
        Err(Error::OutsideSupport { .. })
    ));
}

#[test]
fn deep_in_support_applies_policy_once() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let mut plant = Identity { x: vec![0.0, 0.0] };
    let policy = constant(vec![0.01, 0.0]);
    let report =
        dfr_controller_step(&mut plant, &rule, &policy, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(report.controls, vec![vec![0.01, 0.0]]);
    assert!(report.advanced && report.recoveries.is_empty());
}

#[test]
fn near_boundary_recovers_then_proceeds() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let mut plant = Identity { x: vec![0.95, 0.0] };
    let policy = constant(vec![0.0, 0.1]);
    let report =
        dfr_controller_step(&mut plant, &rule, &policy, 0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert!(!report.recoveries.is_empty());
    assert!(report.advanced);
    assert_eq!(report.controls.last().unwrap(), &vec![0.0, 0.1]);
}

#[test]
fn plateau_halts_at_the_cap() {
    let cfg = SwitchConfig::default();
    let rule = rule(&Plateau, &cfg);
    let mut plant = Identity { x: vec![0.0, 0.0] };
    let policy = constant(vec![0.5, 0.0]);
    let report =
        dfr_controller_step(&mut plant, &rule, &policy, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(report.halted && !report.advanced);
    assert_eq!(report.recoveries.len(), 500);
    let report = oracle_controller_step(&mut plant, &rule, &policy, 0).unwrap();
    assert!(report.halted);
}

#[test]
fn early_stop_and_baseline_definitions() {
    let surface = radial();
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    let policy = constant(vec![0.2, 0.0]);

    let mut plant = Identity { x: vec![0.9, 0.0] };
    let es = early_stop_controller(&mut plant, &rule, &policy, 0).unwrap();
    assert!(es.halted && es.controls.is_empty());
    let base = baseline_controller(&mut plant, &policy).unwrap();
    assert_eq!(base.controls, vec![vec![0.2, 0.0]]);

    // Off the boundary every controller emits the policy control.
    let mut a = Identity { x: vec![0.0, 0.0] };
    let mut b = a.clone();
    let mut c = a.clone();
    let es = early_stop_controller(&mut a, &rule, &policy, 0).unwrap();
    let base = baseline_controller(&mut b, &policy).unwrap();
    let dfr = dfr_controller_step(&mut c, &rule, &policy, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(es.controls, base.controls);
    assert_eq!(dfr.controls, base.controls);
}

#[test]
fn oracle_follows_the_gradient() {
    let surface = Radial {
        center: vec![0.3, -0.2],
    };
    let cfg = SwitchConfig::default();
    let rule = rule(&surface, &cfg);
    for k in 0..36 {
        let theta = k as f64 * std::f64::consts::TAU / 36.0;
        let x = vec![0.3 + 0.7 * theta.cos(), -0.2 + 0.7 * theta.sin()];
        let plant = Identity { x };
        let u = finite_difference_oracle_step(&plant, &rule, 0).unwrap();
        // True ascent direction points at the centre.
        let want = [-theta.cos(), -theta.sin()];
        let cos = (u[0] * want[0] + u[1] * want[1]) / norm(&u);
        assert!(cos >= 5f64.to_radians().cos(), "angle too large at {k}");
        assert!((norm(&u) - rule.eta(0, 0.3)).abs() < 1e-9);
    }
}

#[test]
fn oracle_plateau_and_snapshot_errors() {
    let cfg = SwitchConfig::default();
    let plateau = rule(&Plateau, &cfg);
    let plant = Identity { x: vec![0.0, 0.0] };
    assert_eq!(finite_difference_oracle_step(&plant, &plateau, 0).unwrap(), vec![0.0, 0.0]);
    let surface = radial();
    let radial_rule = rule(&surface, &cfg);
    let plant = NoSnapshot(Identity { x: vec![0.5, 0.0] });
    assert!(matches!(
        finite_difference_oracle_step(&plant, &radial_rule, 0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn probe_lengths_respect_the_plant_cap() {
    let surface = radial();
    let cfg = SwitchConfig {
        lambda: 0.01,
        ..Default::default()
    };
    let mut r = rule(&surface, &cfg);
    r.u_max = 0.05;
    assert_eq!(r.probe_radius(0, 0.5), 0.05);
    assert_eq!(r.eta(0, 0.5), 0.05);
}
