//! Two-coordinate decomposition solver for the one-class dual
//!
//! ```text
//! min  1/2 a^T Q a    s.t.  0 <= a_i <= C,  sum a_i = 1,   C = 1/(nu m)
//! ```
//!
//! Each iteration takes `i` with the smallest gradient among variables that
//! can still grow. The partner `j` is chosen among variables that can still
//! shrink and have a larger gradient, by the largest guaranteed decrease of
//! the objective `(G_j - G_i)^2 / (2 - 2 Q_ij)` (second-order selection; plain
//! maximal-violating-pair selection stalls on near-duplicate points). Ties go
//! to the lowest index. Mass moves from `j` to `i` along the exact line
//! minimiser, clipped to the box. Stopping uses the maximal-violation gap.

use super::cache::KernelMatrix;

pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub converged: bool,
}

/// Feasible starting point: the first `floor(1/C)` variables at the upper
/// bound and the remainder on the next one.
pub(crate) fn initial_alpha(m: usize, upper: f64) -> Vec<f64> {
    let mut alpha = vec![0.0; m];
    let mut remaining: f64 = 1.0;
    for a in alpha.iter_mut() {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(upper);
        *a = take;
        remaining -= take;
    }
    alpha
}

/// Maximal violating pair and the KKT gap `max_{a>0} G - min_{a<C} G`.
pub(crate) fn select_pair(alpha: &[f64], gradient: &[f64], upper: f64) -> (usize, usize, f64) {
    let mut i = usize::MAX;
    let mut j = usize::MAX;
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    for (t, (&a, &g)) in alpha.iter().zip(gradient).enumerate() {
        if a < upper && g < g_min {
            g_min = g;
            i = t;
        }
        if a > 0.0 && g > g_max {
            g_max = g;
            j = t;
        }
    }
    let gap = if i == usize::MAX || j == usize::MAX {
        0.0
    } else {
        (g_max - g_min).max(0.0)
    };
    (i, j, gap)
}

/// Partner for `i` maximising `(G_t - G_i)^2 / (2 - 2 Q_it)` over variables
/// with `a_t > 0` and `G_t > G_i`.
pub(crate) fn second_order_partner(alpha: &[f64], gradient: &[f64], row_i: &[f64], i: usize) -> Option<usize> {
    let gi = gradient[i];
    let mut best = None;
    let mut best_gain = 0.0;
    for (t, ((&a, &g), &q)) in alpha.iter().zip(gradient).zip(row_i).enumerate() {
        if t == i || a <= 0.0 || g <= gi {
            continue;
        }
        let b = g - gi;
        let gain = b * b / (2.0 - 2.0 * q).max(1e-12);
        if gain > best_gain {
            best_gain = gain;
            best = Some(t);
        }
    }
    best
}

pub(crate) fn solve(
    matrix: &mut KernelMatrix<'_>,
    m: usize,
    upper: f64,
    tol: f64,
    max_iters: usize,
) -> DualSolution {
    let mut alpha = initial_alpha(m, upper);

    let mut gradient = vec![0.0; m];
    for t in 0..m {
        let a = alpha[t];
        if a > 0.0 {
            let row = matrix.row(t);
            for (g, q) in gradient.iter_mut().zip(row) {
                *g += a * q;
            }
        }
    }

    let mut iterations = 0;
    loop {
        let (i, j, gap) = select_pair(&alpha, &gradient, upper);
        if gap <= tol {
            return DualSolution {
                alpha,
                gradient,
                iterations,
                gap,
                converged: true,
            };
        }
        if iterations >= max_iters {
            return DualSolution {
                alpha,
                gradient,
                iterations,
                gap,
                converged: false,
            };
        }
        iterations += 1;

        let j = second_order_partner(&alpha, &gradient, matrix.row(i), i).unwrap_or(j);
        let (row_i, row_j) = matrix.row_pair(i, j);
        // Q_ii = Q_jj = 1 for the Gaussian kernel.
        let curvature = (2.0 - 2.0 * row_i[j]).max(1e-12);
        let room_i = upper - alpha[i];
        let room_j = alpha[j];
        let mut delta = (gradient[j] - gradient[i]) / curvature;
        if delta >= room_i.min(room_j) {
            delta = room_i.min(room_j);
            if room_i <= room_j {
                alpha[i] = upper;
                alpha[j] = if room_i == room_j { 0.0 } else { alpha[j] - delta };
            } else {
                alpha[j] = 0.0;
                alpha[i] += delta;
            }
        } else {
            alpha[i] += delta;
            alpha[j] -= delta;
        }
        for ((g, qi), qj) in gradient.iter_mut().zip(row_i).zip(row_j) {
            *g += delta * (qi - qj);
        }
    }
}
