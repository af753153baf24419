use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar primitive used for constraint regions and goals. Both variants are
/// closed sets: touching the boundary counts as inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Circle { center: [f64; 2], radius: f64 },
    /// `{ p : normal . p >= offset }`, with `normal` of unit length.
    HalfPlane { normal: [f64; 2], offset: f64 },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Circle { center, radius } => {
                if !(center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid(format!("bad circle region {self:?}")));
                }
            }
            Region::HalfPlane { normal, offset } => {
                let n = norm(*normal);
                if !((n - 1.0).abs() < 1e-9 && offset.is_finite()) {
                    return Err(Error::invalid(format!(
                        "half-plane normal must be unit length: {self:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether a disc of `radius` centred at `p` touches the region.
    pub fn touches_disc(&self, p: [f64; 2], radius: f64) -> bool {
        match self {
            Region::Circle { center, radius: r } => dist(p, *center) <= r + radius,
            Region::HalfPlane { normal, offset } => dot(*normal, p) + radius >= *offset,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.touches_disc(p, 0.0)
    }

    /// Distance from `p` to the region (0 inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Region::Circle { center, radius } => (dist(p, *center) - radius).max(0.0),
            Region::HalfPlane { normal, offset } => (offset - dot(*normal, p)).max(0.0),
        }
    }
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

/// Scale `u` down to norm at most `max_norm`.
pub fn clip_norm(u: [f64; 2], max_norm: f64) -> [f64; 2] {
    let n = norm(u);
    if n > max_norm {
        scale(u, max_norm / n)
    } else {
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_boundary_is_inside() {
        let c = Region::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert!(c.contains([1.0, 0.0]));
        assert!(!c.contains([1.0 + 1e-12, 0.0]));
        assert!(c.touches_disc([1.5, 0.0], 0.5));
        assert_eq!(c.distance([3.0, 0.0]), 2.0);
    }

    #[test]
    fn half_plane_membership() {
        let h = Region::HalfPlane {
            normal: [0.0, 1.0],
            offset: 4.0,
        };
        assert!(h.contains([0.0, 4.0]));
        assert!(h.contains([10.0, 4.1]));
        assert!(!h.contains([0.0, 3.9]));
        assert!(Region::HalfPlane {
            normal: [0.0, 2.0],
            offset: 1.0
        }
        .validate()
        .is_err());
    }
}
