//! Reference dual solver for small instances: accelerated projected gradient
//! with adaptive restart over `{0 <= a <= C, sum a = 1}`. Shares no code with
//! the decomposition solver except the offset rule.

use super::{model_from_solution, offset_from_gradient, validate_points, OcsvmModel, OcsvmParams};
use crate::error::{Error, Result};

pub const BRUTEFORCE_MAX_POINTS: usize = 10;

const KKT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 2_000_000;

/// Euclidean projection onto the capped simplex by bisection on the shift.
fn project(v: &[f64], upper: f64, out: &mut [f64]) {
    let total = |tau: f64| -> f64 { v.iter().map(|x| (x - tau).clamp(0.0, upper)).sum() };
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - upper;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    for (o, x) in out.iter_mut().zip(v) {
        *o = (x - tau).clamp(0.0, upper);
    }
}

fn matvec(q: &[f64], n: usize, a: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = q[i * n..(i + 1) * n].iter().zip(a).map(|(x, y)| x * y).sum();
    }
}

fn objective(q: &[f64], n: usize, a: &[f64], scratch: &mut [f64]) -> f64 {
    matvec(q, n, a, scratch);
    0.5 * a.iter().zip(scratch.iter()).map(|(x, y)| x * y).sum::<f64>()
}

fn kkt_gap(a: &[f64], g: &[f64], upper: f64) -> f64 {
    let up = a
        .iter()
        .zip(g)
        .filter(|(&x, _)| x < upper)
        .map(|(_, &y)| y)
        .fold(f64::INFINITY, f64::min);
    let low = a
        .iter()
        .zip(g)
        .filter(|(&x, _)| x > 0.0)
        .map(|(_, &y)| y)
        .fold(f64::NEG_INFINITY, f64::max);
    if up.is_finite() && low.is_finite() {
        (low - up).max(0.0)
    } else {
        0.0
    }
}

/// Solve the one-class dual for at most [`BRUTEFORCE_MAX_POINTS`] points.
pub fn solve_dual_bruteforce(points: &[Vec<f64>], params: &OcsvmParams) -> Result<OcsvmModel> {
    params.validate()?;
    validate_points(points)?;
    let n = points.len();
    if n > BRUTEFORCE_MAX_POINTS {
        return Err(Error::invalid(format!(
            "brute-force dual solver accepts at most {BRUTEFORCE_MAX_POINTS} points, got {n}"
        )));
    }
    // Feasible for any nu <= 1; a single point takes the whole mass.
    let upper = params.upper_bound(n).min(1.0).max(1.0 / n as f64);

    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = params.kernel.eval_unchecked(&points[i], &points[j]);
        }
    }
    let lipschitz = (0..n)
        .map(|i| q[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;

    let mut alpha = vec![0.0; n];
    project(&vec![1.0 / n as f64; n], upper, &mut alpha);
    let mut y = alpha.clone();
    let mut momentum = 1.0f64;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut f_prev = objective(&q, n, &alpha, &mut scratch);

    for _ in 0..MAX_ITERS {
        matvec(&q, n, &y, &mut grad);
        for i in 0..n {
            trial[i] = y[i] - step * grad[i];
        }
        project(&trial, upper, &mut next);
        let f_next = objective(&q, n, &next, &mut scratch);
        if f_next > f_prev {
            // restart from the last accepted iterate
            momentum = 1.0;
            y.copy_from_slice(&alpha);
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        for i in 0..n {
            y[i] = next[i] + beta * (next[i] - alpha[i]);
        }
        let moved = alpha
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        alpha.copy_from_slice(&next);
        momentum = m_next;
        f_prev = f_next;

        matvec(&q, n, &alpha, &mut grad);
        if kkt_gap(&alpha, &grad, upper) <= KKT_TOL || moved == 0.0 {
            break;
        }
    }

    matvec(&q, n, &alpha, &mut grad);
    let rho = offset_from_gradient(&alpha, &grad, upper);
    Ok(model_from_solution(points, &alpha, rho, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_points_nu_one_split_evenly() {
        let pts = vec![vec![0.0, 0.0], vec![0.3, 0.1]];
        let m = solve_dual_bruteforce(&pts, &OcsvmParams::new(1.0, 1.0)).unwrap();
        for a in &m.alphas {
            assert_relative_eq!(*a, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_point_takes_all_mass() {
        let m = solve_dual_bruteforce(&[vec![1.0, 2.0]], &OcsvmParams::new(0.5, 1.0)).unwrap();
        assert_eq!(m.alphas, vec![1.0]);
        assert_relative_eq!(m.rho, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn refuses_large_instances() {
        let pts: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64]).collect();
        assert!(matches!(
            solve_dual_bruteforce(&pts, &OcsvmParams::new(0.5, 1.0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn projection_lands_on_feasible_set() {
        let v = [0.9, -0.3, 0.4, 2.0, 0.0];
        let mut out = [0.0; 5];
        project(&v, 0.4, &mut out);
        assert_relative_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(out.iter().all(|&x| (0.0..=0.4).contains(&x)));
    }
}
