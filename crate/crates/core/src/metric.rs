//! Finite metric spaces.
//!
//! A [`FiniteMetricSpace`] is a labelled point set with a validated distance
//! table. Every space holds at least three points. Equality checks in the
//! validator are exact; the triangle inequality is checked with a relative
//! tolerance of [`REL_TOL`] so that snowflaked tables survive rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative tolerance for inequality checks on distances.
pub const REL_TOL: f64 = 1e-9;

/// Smallest admissible number of points.
pub const MIN_POINTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("space needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("distance table is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("{labels} labels for {points} points")]
    LabelCount { labels: usize, points: usize },
    #[error("distance d[{i}][{j}] = {value} is not a finite number")]
    NotFinite { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry d[{0}][{0}] = {1}")]
    NonzeroDiagonal(usize, f64),
    #[error("asymmetric table: d[{i}][{j}] = {dij} but d[{j}][{i}] = {dji}")]
    Asymmetry { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("distinct points {i} and {j} at nonpositive distance {value}")]
    NonpositiveDistance { i: usize, j: usize, value: f64 },
    #[error("triangle inequality fails: d[{i}][{k}] > d[{i}][{j}] + d[{j}][{k}]")]
    TriangleError { i: usize, j: usize, k: usize },
    #[error("snowflake exponent must lie in (0, 1], got {0}")]
    BadExponent(f64),
    #[error("bad point count {0} for a generated space")]
    BadCount(usize),
    #[error("net radius must be positive, got {0}")]
    BadRadius(f64),
}

/// A finite metric space with at least three points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    n: usize,
    dist: Vec<f64>,
    diam: f64,
    s_min: f64,
}

impl FiniteMetricSpace {
    /// Validates a row-major table and builds the space.
    pub fn from_table(dist: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self, MetricError> {
        validate_metric(&dist, labels)
    }

    /// Euclidean distances between planar points.
    pub fn from_points(points: &[[f64; 2]], labels: Option<Vec<String>>) -> Result<Self, MetricError> {
        let table: Vec<Vec<f64>> =
            points.iter().map(|p| points.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).collect()).collect();
        let labels = labels.unwrap_or_else(|| default_labels(points.len()));
        validate_metric(&table, labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Largest pairwise distance.
    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Smallest distance between distinct points.
    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    /// Same points with every distance multiplied by `c > 0`.
    pub fn rescaled(&self, c: f64) -> Result<Self, MetricError> {
        let table: Vec<Vec<f64>> = (0..self.n).map(|i| self.row(i).iter().map(|d| d * c).collect()).collect();
        validate_metric(&table, self.labels.clone())
    }

    /// Distance from `i` to its closest other point.
    pub fn nearest_neighbor_distance(&self, i: usize) -> f64 {
        (0..self.n).filter(|&j| j != i).map(|j| self.dist(i, j)).fold(f64::INFINITY, f64::min)
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Checks every metric axiom and returns the space, or the first violation
/// found in ascending index order.
#[allow(clippy::needless_range_loop)]
pub fn validate_metric(dist: &[Vec<f64>], labels: Vec<String>) -> Result<FiniteMetricSpace, MetricError> {
    let n = dist.len();
    if n < MIN_POINTS {
        return Err(MetricError::TooFewPoints(n));
    }
    for (row, r) in dist.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
        }
    }
    if labels.len() != n {
        return Err(MetricError::LabelCount { labels: labels.len(), points: n });
    }
    for (i, r) in dist.iter().enumerate() {
        for (j, &value) in r.iter().enumerate() {
            if !value.is_finite() {
                return Err(MetricError::NotFinite { i, j, value });
            }
        }
    }
    for i in 0..n {
        if dist[i][i] != 0.0 {
            return Err(MetricError::NonzeroDiagonal(i, dist[i][i]));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (dij, dji) = (dist[i][j], dist[j][i]);
            if dij != dji {
                return Err(MetricError::Asymmetry { i, j, dij, dji });
            }
            if dij <= 0.0 {
                return Err(MetricError::NonpositiveDistance { i, j, value: dij });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let detour = dist[i][j] + dist[j][k];
                if dist[i][k] > detour * (1.0 + REL_TOL) {
                    return Err(MetricError::TriangleError { i, j, k });
                }
            }
        }
    }
    let mut diam = 0.0f64;
    let mut s_min = f64::INFINITY;
    let mut flat = Vec::with_capacity(n * n);
    for (i, r) in dist.iter().enumerate() {
        for (j, &d) in r.iter().enumerate() {
            if i != j {
                diam = diam.max(d);
                s_min = s_min.min(d);
            }
            flat.push(d);
        }
    }
    Ok(FiniteMetricSpace { labels, n, dist: flat, diam, s_min })
}

/// Greedy maximal `r`-separated subset, scanning indices in ascending order.
///
/// A point joins the net iff its distance to every point selected so far is
/// at least `r`. The result always contains index 0.
pub fn separated_net(space: &FiniteMetricSpace, r: f64) -> Result<Vec<usize>, MetricError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(MetricError::BadRadius(r));
    }
    let mut net: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        if net.iter().all(|&j| space.dist(i, j) >= r) {
            net.push(i);
        }
    }
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Line,
    Circle,
    Cantor,
    Random,
}

impl std::str::FromStr for SpaceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(SpaceKind::Line),
            "circle" => Ok(SpaceKind::Circle),
            "cantor" => Ok(SpaceKind::Cantor),
            "random" => Ok(SpaceKind::Random),
            other => Err(format!("unknown space kind `{other}`")),
        }
    }
}

/// Test corpus generator; a pure function of `(kind, n, seed)`.
///
/// `seed` only affects [`SpaceKind::Random`].
pub fn generate_space(kind: SpaceKind, n: usize, seed: u64) -> Result<FiniteMetricSpace, MetricError> {
    if n < MIN_POINTS {
        return Err(MetricError::TooFewPoints(n));
    }
    let labels = default_labels(n);
    match kind {
        SpaceKind::Line => {
            let table: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
            validate_metric(&table, labels)
        }
        SpaceKind::Circle => {
            // chord length 2 sin(|i-j| π / n); antipodal pairs get exactly 2
            let table: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let k = i.abs_diff(j);
                            if k == 0 {
                                0.0
                            } else if 2 * k == n {
                                2.0
                            } else {
                                2.0 * (k as f64 * std::f64::consts::PI / n as f64).sin().abs()
                            }
                        })
                        .collect()
                })
                .collect();
            validate_metric(&table, labels)
        }
        SpaceKind::Cantor => {
            let depth = (n as f64).log2().ceil() as u32;
            let mut ends: Vec<f64> = (0..(1u64 << depth))
                .map(|code| {
                    (0..depth)
                        .filter(|b| code >> (depth - 1 - b) & 1 == 1)
                        .map(|b| 2.0 * 3f64.powi(-(b as i32 + 1)))
                        .sum()
                })
                .collect();
            ends.sort_by(f64::total_cmp);
            ends.truncate(n);
            let table: Vec<Vec<f64>> = ends.iter().map(|x| ends.iter().map(|y| (x - y).abs()).collect()).collect();
            validate_metric(&table, labels)
        }
        SpaceKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            FiniteMetricSpace::from_points(&pts, Some(labels)).map_err(|_| MetricError::BadCount(n))
        }
    }
}

/// Raises every distance to the power `eps`.
pub fn snowflake(space: &FiniteMetricSpace, eps: f64) -> Result<FiniteMetricSpace, MetricError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(MetricError::BadExponent(eps));
    }
    let table: Vec<Vec<f64>> = (0..space.len())
        .map(|i| space.row(i).iter().map(|d| if *d == 0.0 { 0.0 } else { d.powf(eps) }).collect())
        .collect();
    validate_metric(&table, space.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        default_labels(n)
    }

    #[test]
    fn collinear_triple_is_valid() {
        let d = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let s = validate_metric(&d, labels(3)).unwrap();
        assert_eq!(s.diam(), 2.0);
        assert_eq!(s.s_min(), 1.0);
    }

    #[test]
    fn triangle_witness() {
        let d = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert_eq!(validate_metric(&d, labels(3)), Err(MetricError::TriangleError { i: 0, j: 1, k: 2 }));
    }

    #[test]
    fn rejects_bad_tables() {
        let two = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(validate_metric(&two, labels(2)), Err(MetricError::TooFewPoints(2)));

        let asym = vec![vec![0.0, 1.0, 1.0], vec![1.5, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(validate_metric(&asym, labels(3)), Err(MetricError::Asymmetry { i: 0, j: 1, .. })));

        let diag = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.1, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(validate_metric(&diag, labels(3)), Err(MetricError::NonzeroDiagonal(1, _))));

        let dup = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(validate_metric(&dup, labels(3)), Err(MetricError::NonpositiveDistance { .. })));

        let ragged = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(validate_metric(&ragged, labels(3)), Err(MetricError::NotSquare { row: 1, .. })));
    }

    #[test]
    fn nets_on_the_line() {
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        assert_eq!(separated_net(&line, 2.0).unwrap(), vec![0, 2]);
        assert_eq!(separated_net(&line, 0.5 * line.s_min()).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(separated_net(&line, line.diam() + 1.0).unwrap(), vec![0]);
        assert!(separated_net(&line, 0.0).is_err());
    }

    #[test]
    fn generators() {
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        assert_eq!(line.dist(0, 3), 3.0);

        let circle = generate_space(SpaceKind::Circle, 4, 0).unwrap();
        assert_eq!(circle.dist(0, 2), 2.0);

        let a = generate_space(SpaceKind::Random, 16, 7).unwrap();
        let b = generate_space(SpaceKind::Random, 16, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_space(SpaceKind::Random, 16, 8).unwrap();
        assert_ne!(a, c);

        let cantor = generate_space(SpaceKind::Cantor, 5, 0).unwrap();
        assert_eq!(cantor.len(), 5);
        // depth 3: endpoints 0, 2/27, 6/27, 8/27, 18/27, ...
        assert!((cantor.dist(0, 1) - 2.0 / 27.0).abs() < 1e-15);
        assert!((cantor.dist(0, 4) - 18.0 / 27.0).abs() < 1e-15);

        assert_eq!(generate_space(SpaceKind::Line, 2, 0), Err(MetricError::TooFewPoints(2)));
    }

    #[test]
    fn snowflake_cases() {
        let line = generate_space(SpaceKind::Line, 4, 0).unwrap();
        assert_eq!(snowflake(&line, 1.0).unwrap(), line);
        let half = snowflake(&line, 0.5).unwrap();
        assert!((half.dist(0, 3) - 3f64.sqrt()).abs() < 1e-15);
        assert!(validate_metric(&half.to_table(), half.labels().to_vec()).is_ok());

        let five = generate_space(SpaceKind::Line, 5, 0).unwrap();
        assert_eq!(snowflake(&five, 0.5).unwrap().dist(0, 4), 2.0);

        assert_eq!(snowflake(&line, 0.0), Err(MetricError::BadExponent(0.0)));
        assert_eq!(snowflake(&line, 1.5), Err(MetricError::BadExponent(1.5)));
    }
}
