//! The hyperbolic cone `Z × (0, ∞)` with metric
//! `ρ(p, q) = 2 ln((d(x, y) + max(s, t)) / √(st))`.
//!
//! Logarithms here are natural; callers convert.

use thiserror::Error;

use crate::metric::FiniteMetricSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("cone scale must be a positive finite number, got {0}")]
    NonpositiveScale(f64),
    #[error("unknown point {0}")]
    UnknownPoint(usize),
}

/// A point `(z, t)` on the ray `R_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub point: usize,
    pub scale: f64,
}

impl ConePoint {
    pub fn new(point: usize, scale: f64) -> Result<Self, ConeError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ConeError::NonpositiveScale(scale));
        }
        Ok(ConePoint { point, scale })
    }
}

pub fn cone_distance(space: &FiniteMetricSpace, p: ConePoint, q: ConePoint) -> Result<f64, ConeError> {
    for c in [p, q] {
        if !(c.scale > 0.0) || !c.scale.is_finite() {
            return Err(ConeError::NonpositiveScale(c.scale));
        }
        if c.point >= space.len() {
            return Err(ConeError::UnknownPoint(c.point));
        }
    }
    if p == q {
        return Ok(0.0);
    }
    let d = space.dist(p.point, q.point);
    if d == 0.0 {
        // same ray: the formula collapses to |ln s − ln t|
        return Ok((p.scale.ln() - q.scale.ln()).abs());
    }
    let top = d + p.scale.max(q.scale);
    Ok(2.0 * (top.ln() - 0.5 * (p.scale.ln() + q.scale.ln())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate_space, SpaceKind};

    #[test]
    fn examples() {
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        let p = ConePoint::new(1, 0.3).unwrap();
        assert_eq!(cone_distance(&line, p, p).unwrap(), 0.0);

        let a = ConePoint::new(0, 1.0).unwrap();
        let b = ConePoint::new(0, 4.0).unwrap();
        assert!((cone_distance(&line, a, b).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);

        let c = ConePoint::new(1, 1.0).unwrap();
        assert!((cone_distance(&line, a, c).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_scales() {
        assert_eq!(ConePoint::new(0, 0.0), Err(ConeError::NonpositiveScale(0.0)));
        assert!(ConePoint::new(0, -1.0).is_err());
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        let bad = ConePoint { point: 0, scale: -2.0 };
        let ok = ConePoint::new(1, 1.0).unwrap();
        assert!(cone_distance(&line, bad, ok).is_err());
    }

    #[test]
    fn vertical_scaling_is_exact() {
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        for (s, t) in [(0.125, 8.0), (1.0, 1e-6), (3.7, 0.2)] {
            let p = ConePoint::new(2, s).unwrap();
            let q = ConePoint::new(2, t).unwrap();
            assert_eq!(cone_distance(&line, p, q).unwrap(), (s.ln() - t.ln()).abs());
        }
    }
}
