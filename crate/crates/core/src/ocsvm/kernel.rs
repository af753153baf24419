use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Gaussian kernel `k(x, y) = exp(-gamma * |x - y|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        let params = KernelParams { gamma };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_finite() && self.gamma > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "kernel gamma must be positive and finite, got {}",
                self.gamma
            )))
        }
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (-self.gamma * sq_dist(x, y)).exp()
    }

    /// Largest gradient norm of `x -> k(x, c)` over all `x`, attained at
    /// distance `1 / sqrt(2 gamma)` from `c`.
    pub fn max_gradient_norm(&self) -> f64 {
        (2.0 * self.gamma / std::f64::consts::E).sqrt()
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel_eval(x: &[f64], y: &[f64], params: &KernelParams) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(params.eval_unchecked(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_points_give_one() {
        let k = KernelParams::new(5.0).unwrap();
        assert_eq!(kernel_eval(&[0.3, -1.2], &[0.3, -1.2], &k).unwrap(), 1.0);
    }

    #[test]
    fn default_width_value() {
        // |x - y|^2 = 0.2 with gamma = 5 gives exp(-1)
        let k = KernelParams::new(5.0).unwrap();
        let x = [0.0, 0.0];
        let y = [0.2f64.sqrt(), 0.0];
        assert_relative_eq!(
            kernel_eval(&x, &y, &k).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_relative_eq!(kernel_eval(&x, &y, &k).unwrap(), 0.3679, epsilon = 1e-4);
    }

    #[test]
    fn decays_to_zero_far_away() {
        let k = KernelParams::new(1.0).unwrap();
        let v = kernel_eval(&[0.0], &[1e3], &k).unwrap();
        assert!(v >= 0.0 && v < 1e-300);
    }

    #[test]
    fn rejects_dimension_mismatch_and_bad_gamma() {
        let k = KernelParams::new(1.0).unwrap();
        assert!(matches!(
            kernel_eval(&[0.0, 1.0], &[0.0], &k),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn max_gradient_norm_matches_closed_form() {
        // d/dr exp(-g r^2) has magnitude 2 g r exp(-g r^2); scan r numerically.
        let k = KernelParams::new(0.7).unwrap();
        let scanned = (1..20_000)
            .map(|i| {
                let r = i as f64 * 1e-4;
                2.0 * k.gamma * r * (-k.gamma * r * r).exp()
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(scanned, k.max_gradient_norm(), epsilon = 1e-6);
    }
}
