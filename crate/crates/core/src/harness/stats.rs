//! Binomial intervals and one-sided comparisons of outcome rates.

use serde::{Deserialize, Serialize};

/// One-sided 95% normal quantile.
pub const Z_ONE_SIDED_95: f64 = 1.644_853_626_951_472_2;
/// Two-sided 95% normal quantile.
pub const Z_TWO_SIDED_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes / n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Result of a one-sided test that `a_coef * p_a - b_coef * p_b - offset > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSided {
    pub estimate: f64,
    pub lower_bound: f64,
    pub passed: bool,
}

/// Lower one-sided bound on `a_coef * p_a - b_coef * p_b - offset` using
/// Agresti-Caffo adjusted proportions (one pseudo-success and one
/// pseudo-failure added to each group).
pub fn linear_contrast(
    (a_hits, a_n): (usize, usize),
    (b_hits, b_n): (usize, usize),
    a_coef: f64,
    b_coef: f64,
    offset: f64,
    z: f64,
) -> OneSided {
    let raw = |h: usize, n: usize| if n == 0 { 0.0 } else { h as f64 / n as f64 };
    let estimate = a_coef * raw(a_hits, a_n) - b_coef * raw(b_hits, b_n) - offset;
    let adj = |h: usize, n: usize| (h as f64 + 1.0) / (n as f64 + 2.0);
    let (pa, pb) = (adj(a_hits, a_n), adj(b_hits, b_n));
    let (na, nb) = (a_n as f64 + 2.0, b_n as f64 + 2.0);
    let centre = a_coef * pa - b_coef * pb - offset;
    let se = (a_coef * a_coef * pa * (1.0 - pa) / na + b_coef * b_coef * pb * (1.0 - pb) / nb).sqrt();
    let lower_bound = centre - z * se;
    OneSided {
        estimate,
        lower_bound,
        passed: lower_bound > 0.0,
    }
}

/// Is `p_a <= ratio * p_b` with one-sided 95% confidence?
pub fn rate_below_fraction_of(a: (usize, usize), b: (usize, usize), ratio: f64) -> OneSided {
    linear_contrast(b, a, ratio, 1.0, 0.0, Z_ONE_SIDED_95)
}

/// Is `p_a >= p_b + margin` with one-sided 95% confidence?
pub fn rate_exceeds_by(a: (usize, usize), b: (usize, usize), margin: f64) -> OneSided {
    linear_contrast(a, b, 1.0, 1.0, margin, Z_ONE_SIDED_95)
}

/// Is `p_a` significantly greater than `p_b` (one-sided 95%)?
pub fn significantly_greater(a: (usize, usize), b: (usize, usize)) -> OneSided {
    linear_contrast(a, b, 1.0, 1.0, 0.0, Z_ONE_SIDED_95)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: (0.0552, 0.1744) to four places.
        let (lo, hi) = wilson_interval(10, 100, Z_TWO_SIDED_95);
        assert!((lo - 0.0552).abs() < 5e-5 && (hi - 0.1744).abs() < 5e-5);
        assert_eq!(wilson_interval(0, 0, Z_TWO_SIDED_95), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 50, Z_TWO_SIDED_95);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn contrast_by_hand() {
        // a: 3/98 -> 4/100, b: 48/98 -> 49/100.
        let r = rate_below_fraction_of((3, 98), (48, 98), 0.5);
        let (pa, pb): (f64, f64) = (0.04, 0.49);
        let se = (0.25 * pb * (1.0 - pb) / 100.0 + pa * (1.0 - pa) / 100.0).sqrt();
        assert!((r.lower_bound - (0.5 * pb - pa - Z_ONE_SIDED_95 * se)).abs() < 1e-12);
        assert!((r.estimate - (0.5 * 48.0 / 98.0 - 3.0 / 98.0)).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn equal_rates_are_not_significant() {
        assert!(!significantly_greater((30, 100), (30, 100)).passed);
        assert!(significantly_greater((60, 100), (30, 100)).passed);
        assert!(!rate_exceeds_by((50, 300), (45, 300), 0.1).passed);
        assert!(rate_exceeds_by((200, 300), (60, 300), 0.1).passed);
    }
}
