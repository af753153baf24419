//! Gaussian-kernel one-class SVM.
//!
//! Training solves the dual with a decomposition solver ([`train_ocsvm`]); a
//! projected-gradient solver ([`solve_dual_bruteforce`]) over the same feasible
//! set is kept as an independent check for small instances.
//!
//! Dual coefficients are normalised so they sum to one, with box bound
//! `1 / (nu m)`. The decision function is `g(x) = sum_i a_i k(x_i, x) - rho`,
//! positive inside the estimated support.

mod cache;
mod kernel;
mod oracle;
mod smo;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::io::write_atomic;

pub use kernel::{kernel_eval, KernelParams};
pub use oracle::{solve_dual_bruteforce, BRUTEFORCE_MAX_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcsvmParams {
    pub nu: f64,
    pub kernel: KernelParams,
    pub solver_tol: f64,
    pub max_solver_iters: usize,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        OcsvmParams {
            nu: 0.05,
            kernel: KernelParams { gamma: 5.0 },
            solver_tol: 1e-8,
            max_solver_iters: 1_000_000,
        }
    }
}

impl OcsvmParams {
    pub fn new(nu: f64, gamma: f64) -> Self {
        OcsvmParams {
            nu,
            kernel: KernelParams { gamma },
            ..Default::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solver_tol = tol;
        self
    }

    // nu = 1 is admitted: it pins every coefficient to 1/m, which gives
    // closed-form instances.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::invalid(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(Error::invalid(format!(
                "solver_tol must be positive, got {}",
                self.solver_tol
            )));
        }
        if self.max_solver_iters == 0 {
            return Err(Error::invalid("max_solver_iters must be positive"));
        }
        self.kernel.validate()
    }

    /// Box bound on each dual coefficient for `m` training points.
    pub fn upper_bound(&self, m: usize) -> f64 {
        1.0 / (self.nu * m as f64)
    }
}

/// A trained one-class SVM. Only points with nonzero coefficient are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub kernel: KernelParams,
    pub nu: f64,
    pub train_count: usize,
}

/// Solver diagnostics returned next to a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub kkt_gap: f64,
}

impl OcsvmModel {
    /// Assemble a model from explicit parts, e.g. for synthetic tests.
    /// Coefficients must be positive; they need not sum to one.
    pub fn from_parts(
        support_vectors: Vec<Vec<f64>>,
        alphas: Vec<f64>,
        rho: f64,
        kernel: KernelParams,
        nu: f64,
        train_count: usize,
    ) -> Result<Self> {
        kernel.validate()?;
        if support_vectors.is_empty() || support_vectors.len() != alphas.len() {
            return Err(Error::invalid(
                "model needs one coefficient per support vector and at least one support vector",
            ));
        }
        let dim = support_vectors[0].len();
        for sv in &support_vectors {
            check_dim(dim, sv.len())?;
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) || !rho.is_finite() {
            return Err(Error::invalid("coefficients must be positive and finite"));
        }
        Ok(OcsvmModel {
            support_vectors,
            alphas,
            rho,
            kernel,
            nu,
            train_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.support_vectors[0].len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.decision_unchecked(x))
    }

    #[inline]
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            - self.rho
    }

    /// `1/2 a^T Q a` over the stored coefficients.
    pub fn dual_objective(&self) -> f64 {
        let mut total = 0.0;
        for (i, (xi, ai)) in self.support_vectors.iter().zip(&self.alphas).enumerate() {
            total += 0.5 * ai * ai;
            for (xj, aj) in self.support_vectors[..i].iter().zip(&self.alphas) {
                total += ai * aj * self.kernel.eval_unchecked(xi, xj);
            }
        }
        total
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&text)
    }
}

/// Upper bound on `|grad g|`: `sqrt(2 gamma / e) * sum_i a_i`.
pub fn lipschitz_bound(model: &OcsvmModel) -> f64 {
    model.kernel.max_gradient_norm() * model.alpha_sum()
}

#[derive(Serialize, Deserialize)]
struct SupportEntry {
    vector: Vec<f64>,
    alpha: f64,
}

/// On-disk form of a model: one JSON document.
#[derive(Serialize, Deserialize)]
struct ModelDocument {
    gamma: f64,
    nu: f64,
    rho: f64,
    train_count: usize,
    support: Vec<SupportEntry>,
}

impl From<&OcsvmModel> for ModelDocument {
    fn from(m: &OcsvmModel) -> Self {
        ModelDocument {
            gamma: m.kernel.gamma,
            nu: m.nu,
            rho: m.rho,
            train_count: m.train_count,
            support: m
                .support_vectors
                .iter()
                .zip(&m.alphas)
                .map(|(v, &alpha)| SupportEntry {
                    vector: v.clone(),
                    alpha,
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelDocument> for OcsvmModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let (vectors, alphas) = doc.support.into_iter().map(|e| (e.vector, e.alpha)).unzip();
        OcsvmModel::from_parts(
            vectors,
            alphas,
            doc.rho,
            KernelParams { gamma: doc.gamma },
            doc.nu,
            doc.train_count,
        )
    }
}

/// KKT-consistent offset: the mean gradient over free coefficients, or the
/// midpoint of the feasible interval when every coefficient sits on a bound.
pub(crate) fn offset_from_gradient(alpha: &[f64], gradient: &[f64], upper: f64) -> f64 {
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let mut at_upper_max = f64::NEG_INFINITY;
    let mut at_zero_min = f64::INFINITY;
    for (&a, &g) in alpha.iter().zip(gradient) {
        if a > 0.0 && a < upper {
            free_sum += g;
            free_n += 1;
        } else if a >= upper {
            at_upper_max = at_upper_max.max(g);
        } else {
            at_zero_min = at_zero_min.min(g);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else if at_zero_min.is_finite() && at_upper_max.is_finite() {
        0.5 * (at_upper_max + at_zero_min)
    } else if at_upper_max.is_finite() {
        at_upper_max
    } else {
        at_zero_min
    }
}

pub(crate) fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("training set is empty"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::invalid("training points have dimension 0"));
    }
    for p in points {
        check_dim(dim, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("training points must be finite"));
        }
    }
    Ok(dim)
}

pub(crate) fn model_from_solution(
    points: &[Vec<f64>],
    alpha: &[f64],
    rho: f64,
    params: &OcsvmParams,
) -> OcsvmModel {
    let (support_vectors, alphas) = points
        .iter()
        .zip(alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|(p, &a)| (p.clone(), a))
        .unzip();
    OcsvmModel {
        support_vectors,
        alphas,
        rho,
        kernel: params.kernel,
        nu: params.nu,
        train_count: points.len(),
    }
}

pub fn train_ocsvm(points: &[Vec<f64>], params: &OcsvmParams) -> Result<OcsvmModel> {
    train_ocsvm_with_report(points, params).map(|(model, _)| model)
}

pub fn train_ocsvm_with_report(
    points: &[Vec<f64>],
    params: &OcsvmParams,
) -> Result<(OcsvmModel, SolverReport)> {
    params.validate()?;
    validate_points(points)?;
    let m = points.len();
    if params.nu * (m as f64) < 1.0 {
        return Err(Error::invalid(format!(
            "need m * nu >= 1, got m = {m}, nu = {}",
            params.nu
        )));
    }

    if points.iter().all(|p| p == &points[0]) {
        let model = OcsvmModel {
            support_vectors: vec![points[0].clone()],
            alphas: vec![1.0],
            rho: 1.0,
            kernel: params.kernel,
            nu: params.nu,
            train_count: m,
        };
        let report = SolverReport {
            iterations: 0,
            kkt_gap: 0.0,
        };
        return Ok((model, report));
    }

    let upper = params.upper_bound(m);
    let mut matrix = cache::KernelMatrix::new(points, params.kernel);
    let sol = smo::solve(
        &mut matrix,
        m,
        upper,
        params.solver_tol,
        params.max_solver_iters,
    );
    let rho = offset_from_gradient(&sol.alpha, &sol.gradient, upper);
    let model = model_from_solution(points, &sol.alpha, rho, params);
    if !sol.converged {
        return Err(Error::NotConverged {
            best: Box::new(model),
            iterations: sol.iterations,
            gap: sol.gap,
        });
    }
    Ok((
        model,
        SolverReport {
            iterations: sol.iterations,
            kkt_gap: sol.gap,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_cloud(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect()
    }

    #[test]
    fn identical_points_collapse_to_one_support_vector() {
        let pts = vec![vec![0.4, -0.2]; 3];
        let model = train_ocsvm(&pts, &OcsvmParams::new(0.5, 5.0)).unwrap();
        assert_eq!(model.support_vectors.len(), 1);
        for p in &pts {
            assert!(model.decision_value(p).unwrap().abs() <= 1e-8);
        }
        assert!(model.decision_value(&[3.0, 3.0]).unwrap() < 0.0);
    }

    #[test]
    fn two_points_at_nu_one_match_closed_form() {
        // nu = 1 forces a = (1/2, 1/2); rho = (1 + k12)/2 by symmetry.
        let gamma = 0.8;
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.5]];
        let model = train_ocsvm(&pts, &OcsvmParams::new(1.0, gamma)).unwrap();
        let d2 = 1.0 + 0.25;
        let k12 = (-gamma * d2).exp();
        assert_relative_eq!(model.rho, 0.5 * (1.0 + k12), epsilon = 1e-12);
        let mid = [0.5, 0.25];
        let expected = (-gamma * d2 / 4.0).exp() - 0.5 * (1.0 + k12);
        assert_relative_eq!(model.decision_value(&mid).unwrap(), expected, epsilon = 1e-12);
        for a in &model.alphas {
            assert_relative_eq!(*a, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn far_point_decision_is_minus_rho() {
        let pts = gaussian_cloud(60, 3);
        let model = train_ocsvm(&pts, &OcsvmParams::new(0.2, 1.0)).unwrap();
        let v = model.decision_value(&[100.0, -100.0]).unwrap();
        assert_eq!(v, -model.rho);
    }

    #[test]
    fn kkt_conditions_hold_after_training() {
        let pts = gaussian_cloud(200, 11);
        let params = OcsvmParams::new(0.1, 0.5);
        let model = train_ocsvm(&pts, &params).unwrap();
        let upper = params.upper_bound(pts.len());
        assert_relative_eq!(model.alpha_sum(), 1.0, epsilon = 1e-9);
        for (sv, &a) in model.support_vectors.iter().zip(&model.alphas) {
            assert!(a > 0.0 && a <= upper + 1e-15);
            if a < upper - params.solver_tol {
                assert!(model.decision_value(sv).unwrap().abs() <= params.solver_tol);
            }
        }
    }

    #[test]
    fn nu_property_on_gaussian_cloud() {
        let pts = gaussian_cloud(500, 5);
        let params = OcsvmParams::new(0.05, 0.5);
        let model = train_ocsvm(&pts, &params).unwrap();
        let outliers = pts
            .iter()
            .filter(|p| model.decision_value(p).unwrap() < -params.solver_tol)
            .count();
        assert!(outliers as f64 / 500.0 <= 0.05 + 0.02);
        assert!(model.support_vectors.len() as f64 / 500.0 >= 0.05 - 0.02);
    }

    #[test]
    fn lipschitz_of_single_unit_vector() {
        let m = OcsvmModel::from_parts(
            vec![vec![0.0, 0.0]],
            vec![1.0],
            0.5,
            KernelParams { gamma: 0.5 },
            0.5,
            1,
        )
        .unwrap();
        assert_relative_eq!(lipschitz_bound(&m), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(lipschitz_bound(&m), 0.6065, epsilon = 1e-4);
    }

    #[test]
    fn lipschitz_scales_with_coefficients() {
        let pts = gaussian_cloud(40, 8);
        let m = train_ocsvm(&pts, &OcsvmParams::new(0.3, 1.0)).unwrap();
        let scaled = OcsvmModel::from_parts(
            m.support_vectors.clone(),
            m.alphas.iter().map(|a| a * 3.5).collect(),
            m.rho,
            m.kernel,
            m.nu,
            m.train_count,
        )
        .unwrap();
        assert_relative_eq!(lipschitz_bound(&scaled), 3.5 * lipschitz_bound(&m), epsilon = 1e-12);
    }

    #[test]
    fn lipschitz_bounds_grid_slopes() {
        let pts = gaussian_cloud(80, 21);
        let m = train_ocsvm(&pts, &OcsvmParams::new(0.1, 2.0)).unwrap();
        let l = lipschitz_bound(&m);
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for i in 0..60 {
            for j in 0..60 {
                let x = [-3.0 + 0.1 * i as f64, -3.0 + 0.1 * j as f64];
                let g0 = m.decision_value(&x).unwrap();
                let gx = m.decision_value(&[x[0] + h, x[1]]).unwrap();
                let gy = m.decision_value(&[x[0], x[1] + h]).unwrap();
                let slope = ((gx - g0).powi(2) + (gy - g0).powi(2)).sqrt() / h;
                worst = worst.max(slope);
            }
        }
        assert!(worst <= l, "finite-difference slope {worst} exceeds bound {l}");
    }

    #[test]
    fn errors_on_bad_input() {
        let p = OcsvmParams::new(0.5, 1.0);
        assert!(matches!(train_ocsvm(&[], &p), Err(Error::InvalidInput(_))));
        assert!(matches!(
            train_ocsvm(&[vec![0.0, 1.0], vec![1.0]], &p),
            Err(Error::DimensionMismatch { .. })
        ));
        // m * nu < 1
        assert!(train_ocsvm(&[vec![0.0]], &OcsvmParams::new(0.5, 1.0)).is_err());
        assert!(OcsvmParams::new(0.0, 1.0).validate().is_err());
        assert!(OcsvmParams::new(1.5, 1.0).validate().is_err());
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let pts = gaussian_cloud(100, 2);
        let mut params = OcsvmParams::new(0.1, 1.0).with_tol(1e-12);
        params.max_solver_iters = 3;
        match train_ocsvm(&pts, &params) {
            Err(Error::NotConverged { best, iterations, gap }) => {
                assert_eq!(iterations, 3);
                assert!(gap > 1e-12);
                assert_relative_eq!(best.alpha_sum(), 1.0, epsilon = 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn decision_rejects_wrong_dimension() {
        let m = train_ocsvm(&gaussian_cloud(20, 1), &OcsvmParams::new(0.5, 1.0)).unwrap();
        assert!(matches!(
            m.decision_value(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = train_ocsvm(&gaussian_cloud(50, 9), &OcsvmParams::new(0.2, 1.3)).unwrap();
        let back = OcsvmModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.alphas.iter().zip(&m.alphas) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn large_problem_uses_row_cache_and_converges() {
        let pts = gaussian_cloud(cache::FULL_MATRIX_LIMIT + 200, 4);
        let params = OcsvmParams::new(0.05, 0.5).with_tol(1e-6);
        let (model, report) = train_ocsvm_with_report(&pts, &params).unwrap();
        assert!(report.kkt_gap <= 1e-6);
        assert_relative_eq!(model.alpha_sum(), 1.0, epsilon = 1e-9);
    }
}
