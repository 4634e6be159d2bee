//! Power quasi-symmetric maps between finite spaces.
//!
//! A bijection `f` is `η`-quasi-symmetric when for all triples with `x ≠ z`,
//! `y ≠ z`:
//!
//! ```text
//! d(f x, f z) / d(f y, f z) ≤ η(d(x, z) / d(y, z))
//! ```
//!
//! with the two-branch power control `η(t) = λ t^{θ_lo}` for `t < 1` and
//! `λ t^{θ_hi}` for `t ≥ 1`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, REL_TOL};

/// Upper end of the θ search.
pub const THETA_CAP: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsError {
    #[error("source has {source_len} points but target has {target_len}")]
    SizeMismatch { source_len: usize, target_len: usize },
    #[error("forward table is not a bijection (index {0} repeated or out of range)")]
    NotBijective(usize),
    #[error("bad argument {0}: must be positive")]
    BadArgument(f64),
    #[error("invalid power control: {0}")]
    BadControl(String),
    #[error("no θ ≤ {cap} passes at λ = {lambda}")]
    NoThetaUnderCap { lambda: f64, cap: f64 },
}

/// A bijection between two finite spaces of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    source: Arc<FiniteMetricSpace>,
    target: Arc<FiniteMetricSpace>,
    forward: Vec<usize>,
}

impl PointMap {
    pub fn new(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        forward: Vec<usize>,
    ) -> Result<Self, QsError> {
        if source.len() != target.len() || forward.len() != source.len() {
            return Err(QsError::SizeMismatch {
                source_len: source.len(),
                target_len: target.len().min(forward.len()),
            });
        }
        let mut seen = vec![false; forward.len()];
        for &w in &forward {
            if w >= seen.len() || seen[w] {
                return Err(QsError::NotBijective(w));
            }
            seen[w] = true;
        }
        Ok(PointMap { source, target, forward })
    }

    /// Index-wise identity between two spaces of equal size.
    pub fn identity(source: Arc<FiniteMetricSpace>, target: Arc<FiniteMetricSpace>) -> Result<Self, QsError> {
        let n = source.len();
        Self::new(source, target, (0..n).collect())
    }

    /// A seeded uniformly random bijection.
    pub fn random(source: Arc<FiniteMetricSpace>, target: Arc<FiniteMetricSpace>, seed: u64) -> Result<Self, QsError> {
        let mut forward: Vec<usize> = (0..source.len()).collect();
        forward.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(source, target, forward)
    }

    pub fn source(&self) -> &FiniteMetricSpace {
        &self.source
    }

    pub fn target(&self) -> &FiniteMetricSpace {
        &self.target
    }

    pub fn source_arc(&self) -> Arc<FiniteMetricSpace> {
        Arc::clone(&self.source)
    }

    pub fn target_arc(&self) -> Arc<FiniteMetricSpace> {
        Arc::clone(&self.target)
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    #[inline]
    pub fn apply(&self, z: usize) -> usize {
        self.forward[z]
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn inverse(&self) -> PointMap {
        let mut back = vec![0; self.forward.len()];
        for (z, &w) in self.forward.iter().enumerate() {
            back[w] = z;
        }
        PointMap { source: self.target_arc(), target: self.source_arc(), forward: back }
    }

    /// `next ∘ self`. The spaces are matched by index count only.
    pub fn then(&self, next: &PointMap) -> Result<PointMap, QsError> {
        let forward = self.forward.iter().map(|&w| next.forward[w]).collect();
        PointMap::new(self.source_arc(), next.target_arc(), forward)
    }

    /// Same bijection into a different target of equal size.
    pub fn with_target(&self, target: Arc<FiniteMetricSpace>) -> Result<PointMap, QsError> {
        PointMap::new(self.source_arc(), target, self.forward.clone())
    }
}

/// Two-branch power control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControl {
    pub theta_low: f64,
    pub theta_high: f64,
    pub lambda: f64,
}

impl PowerControl {
    pub fn new(theta_low: f64, theta_high: f64, lambda: f64) -> Result<Self, QsError> {
        if !(theta_low > 0.0 && theta_high >= theta_low) {
            return Err(QsError::BadControl(format!("need 0 < θ_lo ≤ θ_hi, got ({theta_low}, {theta_high})")));
        }
        if !(lambda >= 1.0) {
            return Err(QsError::BadControl(format!("need λ ≥ 1, got {lambda}")));
        }
        Ok(PowerControl { theta_low, theta_high, lambda })
    }

    /// The symmetric form `(1/θ, θ, λ)`.
    pub fn symmetric(theta: f64, lambda: f64) -> Result<Self, QsError> {
        Self::new(1.0 / theta, theta, lambda)
    }

    pub fn eta(&self, t: f64) -> Result<f64, QsError> {
        if !(t > 0.0) {
            return Err(QsError::BadArgument(t));
        }
        Ok(self.lambda * shape(self.theta_low, self.theta_high, t))
    }
}

#[inline]
fn shape(lo: f64, hi: f64, t: f64) -> f64 {
    if t < 1.0 {
        t.powf(lo)
    } else {
        t.powf(hi)
    }
}

pub fn eta(ctrl: &PowerControl, t: f64) -> Result<f64, QsError> {
    ctrl.eta(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QsCheck {
    pub passed: bool,
    /// `(x, y, z)` maximizing `ratio′ / η(ratio)`.
    pub worst: Option<(usize, usize, usize)>,
    pub worst_ratio: f64,
}

/// Scans every ordered triple and returns the worst `ratio′ / shape(ratio)`.
fn triple_scan(map: &PointMap, lo: f64, hi: f64) -> (f64, Option<(usize, usize, usize)>) {
    let (src, dst, f) = (map.source(), map.target(), map.forward());
    let n = map.len();
    let none: (f64, Option<(usize, usize, usize)>) = (f64::NEG_INFINITY, None);
    let pick = |a: (f64, Option<(usize, usize, usize)>), b: (f64, Option<(usize, usize, usize)>)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = none;
            for z in 0..n {
                if z == x {
                    continue;
                }
                let dxz = src.dist(x, z);
                let fxz = dst.dist(f[x], f[z]);
                for y in 0..n {
                    if y == z || y == x {
                        continue;
                    }
                    let t = dxz / src.dist(y, z);
                    let image = fxz / dst.dist(f[y], f[z]);
                    best = pick(best, (image / shape(lo, hi, t), Some((x, y, z))));
                }
            }
            best
        })
        .reduce(|| none, pick)
}

/// Exhaustive check of the control inequality, with relative tolerance
/// [`REL_TOL`].
pub fn qs_check(map: &PointMap, ctrl: &PowerControl) -> QsCheck {
    let (worst, at) = triple_scan(map, ctrl.theta_low, ctrl.theta_high);
    let worst_ratio = worst / ctrl.lambda;
    QsCheck { passed: worst_ratio <= 1.0 + REL_TOL, worst: at, worst_ratio }
}

/// Minimal λ for the symmetric control `(1/θ, θ, ·)`.
pub fn qs_fit_lambda(map: &PointMap, theta: f64) -> f64 {
    qs_fit_lambda_with(map, 1.0 / theta, theta)
}

/// Minimal λ for the control `(θ_lo, θ_hi, ·)`.
pub fn qs_fit_lambda_with(map: &PointMap, theta_low: f64, theta_high: f64) -> f64 {
    triple_scan(map, theta_low, theta_high).0.max(0.0)
}

/// Binary search for the smallest θ in `[1, THETA_CAP]` at which
/// `qs_check` passes with `(1/θ, θ, λ)`; the predicate is monotone in θ.
pub fn qs_fit_theta(map: &PointMap, lambda: f64, tol: f64) -> Result<f64, QsError> {
    let passes = |theta: f64| qs_check(map, &PowerControl { theta_low: 1.0 / theta, theta_high: theta, lambda }).passed;
    if passes(1.0) {
        return Ok(1.0);
    }
    if !passes(THETA_CAP) {
        return Err(QsError::NoThetaUnderCap { lambda, cap: THETA_CAP });
    }
    let (mut lo, mut hi) = (1.0, THETA_CAP);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
