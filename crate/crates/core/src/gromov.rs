//! Gromov products, four-point hyperbolicity and Busemann surrogates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::filling::FillingGraph;
use crate::metric::FiniteMetricSpace;

/// Vertex-count guard for the O(n⁴) exhaustive δ scan.
pub const EXHAUSTIVE_LIMIT: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GromovError {
    #[error("unknown point {0}")]
    UnknownPoint(usize),
    #[error("{size} points exceed the exhaustive limit {limit}")]
    TooLargeForExhaustive { size: usize, limit: usize },
    #[error("need at least one point")]
    Empty,
}

/// Anything that can report distances between indexed points.
pub trait DistanceOracle: Sync {
    fn size(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;
}

impl DistanceOracle for FiniteMetricSpace {
    fn size(&self) -> usize {
        self.len()
    }
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist(i, j)
    }
}

impl DistanceOracle for FillingGraph {
    fn size(&self) -> usize {
        self.vertex_count()
    }
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist_ids(i, j) as f64
    }
}

/// Dense distance matrix, e.g. the graph metric of a filling loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "distance matrix must be n×n");
        DistanceMatrix { n, data }
    }
}

impl DistanceOracle for DistanceMatrix {
    fn size(&self) -> usize {
        self.n
    }
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

fn check<O: DistanceOracle + ?Sized>(oracle: &O, pts: &[usize]) -> Result<(), GromovError> {
    match pts.iter().find(|&&p| p >= oracle.size()) {
        Some(&p) => Err(GromovError::UnknownPoint(p)),
        None => Ok(()),
    }
}

#[inline]
fn product<O: DistanceOracle + ?Sized>(o: &O, x: usize, y: usize, base: usize) -> f64 {
    0.5 * (o.distance(x, base) + o.distance(y, base) - o.distance(x, y))
}

/// `(x|y)_o = (d(x,o) + d(y,o) − d(x,y)) / 2`.
pub fn gromov_product<O: DistanceOracle + ?Sized>(
    oracle: &O,
    x: usize,
    y: usize,
    o: usize,
) -> Result<f64, GromovError> {
    check(oracle, &[x, y, o])?;
    Ok(product(oracle, x, y, o))
}

/// `⟨x,y,z,u⟩ = (x|y)_o + (z|u)_o − (x|z)_o − (y|u)_o`; independent of `o`.
pub fn cross_difference<O: DistanceOracle + ?Sized>(
    oracle: &O,
    x: usize,
    y: usize,
    z: usize,
    u: usize,
    o: usize,
) -> Result<f64, GromovError> {
    check(oracle, &[x, y, z, u, o])?;
    Ok(product(oracle, x, y, o) + product(oracle, z, u, o) - product(oracle, x, z, o) - product(oracle, y, u, o))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Exhaustive,
    Sampled,
}

impl DeltaMode {
    pub fn name(self) -> &'static str {
        match self {
            DeltaMode::Exhaustive => "exhaustive",
            DeltaMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityReport {
    pub delta: f64,
    pub mode: DeltaMode,
    /// Quadruples examined.
    pub sample_count: usize,
    /// `(x, y, z, o)` attaining `delta`.
    pub witness: [usize; 4],
}

#[inline]
fn defect<O: DistanceOracle + ?Sized>(d: &O, x: usize, y: usize, z: usize, o: usize) -> f64 {
    product(d, x, z, o).min(product(d, z, y, o)) - product(d, x, y, o)
}

fn better(a: (f64, [usize; 4]), b: (f64, [usize; 4])) -> (f64, [usize; 4]) {
    // ties resolve to the lexicographically smaller witness so parallel
    // reductions stay deterministic
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Smallest δ with `(x|y)_o ≥ (x|z)_o ∧ (z|y)_o − δ` over every quadruple
/// (exhaustive) or over `4 · sample_count` seeded quadruples (sampled).
pub fn hyperbolicity_delta<O: DistanceOracle + ?Sized>(
    oracle: &O,
    mode: DeltaMode,
    sample_count: usize,
    seed: u64,
) -> Result<HyperbolicityReport, GromovError> {
    hyperbolicity_delta_with_limit(oracle, mode, sample_count, seed, EXHAUSTIVE_LIMIT)
}

pub fn hyperbolicity_delta_with_limit<O: DistanceOracle + ?Sized>(
    oracle: &O,
    mode: DeltaMode,
    sample_count: usize,
    seed: u64,
    limit: usize,
) -> Result<HyperbolicityReport, GromovError> {
    let n = oracle.size();
    if n == 0 {
        return Err(GromovError::Empty);
    }
    let start = (0.0, [0usize; 4]);
    match mode {
        DeltaMode::Exhaustive => {
            if n > limit {
                return Err(GromovError::TooLargeForExhaustive { size: n, limit });
            }
            let (delta, witness) = (0..n)
                .into_par_iter()
                .map(|x| {
                    let mut best = start;
                    for y in 0..n {
                        for z in 0..n {
                            for o in 0..n {
                                best = better(best, (defect(oracle, x, y, z, o), [x, y, z, o]));
                            }
                        }
                    }
                    best
                })
                .reduce(|| start, better);
            Ok(HyperbolicityReport { delta, mode, sample_count: n.pow(4), witness })
        }
        DeltaMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total = 4 * sample_count;
            let mut best = start;
            for _ in 0..total {
                let q = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                best = better(best, (defect(oracle, q[0], q[1], q[2], q[3]), q));
            }
            Ok(HyperbolicityReport { delta: best.0, mode, sample_count: total, witness: best.1 })
        }
    }
}

/// Busemann function of the descending ray of `anchor`, truncated at the root.
///
/// `b[v] = |γ(T) − v| − T`, where `γ(0)` is the deepest ray vertex and
/// `T = n_max − n_min` is the truncation depth, so that `γ(T)` is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct BusemannSurrogate {
    pub anchor: usize,
    /// Ray vertex ids from `γ(0)` (deepest) down to `γ(T)` (root).
    pub ray: Vec<usize>,
    pub depth: u32,
    pub values: Vec<f64>,
}

impl BusemannSurrogate {
    pub fn value(&self, v: usize) -> Result<f64, GromovError> {
        self.values.get(v).copied().ok_or(GromovError::UnknownPoint(v))
    }

    /// `γ(0)`.
    pub fn origin(&self) -> usize {
        self.ray[0]
    }

    /// `γ(T)`, the truncated boundary point.
    pub fn end(&self) -> usize {
        *self.ray.last().expect("ray is nonempty")
    }
}

pub fn busemann_values(filling: &FillingGraph, anchor: usize) -> Result<BusemannSurrogate, GromovError> {
    let mut ray = filling.anchored_ray(anchor).map_err(|_| GromovError::UnknownPoint(anchor))?.to_vec();
    ray.reverse();
    let depth = (filling.n_max() - filling.n_min()) as u32;
    let end = *ray.last().expect("ray is nonempty");
    let values = (0..filling.vertex_count()).map(|v| filling.dist_ids(end, v) as f64 - depth as f64).collect();
    Ok(BusemannSurrogate { anchor, ray, depth, values })
}

/// `(x|y)_b = (b(x) + b(y) − |x − y|) / 2`.
pub fn gromov_product_b(filling: &FillingGraph, b: &BusemannSurrogate, x: usize, y: usize) -> Result<f64, GromovError> {
    let bx = b.value(x)?;
    let by = b.value(y)?;
    Ok(0.5 * (bx + by - filling.dist_ids(x, y) as f64))
}

/// Largest gap between `(x|y)_b` and `(x|y)_o − (x|ω)_o − (y|ω)_o` over all
/// vertex pairs, with `o = γ(0)` and the root standing in for `ω`.
pub fn busemann_deviation_fit(filling: &FillingGraph, b: &BusemannSurrogate) -> f64 {
    let (o, w) = (b.origin(), b.end());
    let n = filling.vertex_count();
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0.0f64;
            for y in 0..n {
                let lhs = 0.5 * (b.values[x] + b.values[y] - filling.dist_ids(x, y) as f64);
                let rhs = product(filling, x, y, o) - product(filling, x, w, o) - product(filling, y, w, o);
                worst = worst.max((lhs - rhs).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest `c ≥ 0` with `(x|y)_b ≥ (x|z)_b ∧ (z|y)_b − c` over all vertex triples.
pub fn busemann_three_point_fit(filling: &FillingGraph, b: &BusemannSurrogate) -> f64 {
    let n = filling.vertex_count();
    let gb = |x: usize, y: usize| 0.5 * (b.values[x] + b.values[y] - filling.dist_ids(x, y) as f64);
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0.0f64;
            for y in 0..n {
                let xy = gb(x, y);
                for z in 0..n {
                    worst = worst.max(gb(x, z).min(gb(z, y)) - xy);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Visual comparability constant: the smallest `C ≥ 1` with
/// `C^{-1} ≤ d_Z(z, z′) / α^{−(z|z′)_b} ≤ C` over all base pairs, where the
/// boundary product is read off at the deepest ray vertices.
pub fn visual_compare_fit(filling: &FillingGraph, b: &BusemannSurrogate) -> f64 {
    let base = filling.base();
    let n = base.len();
    let mut hi = 1.0f64;
    let mut lo = 1.0f64;
    for z in 0..n {
        for w in (z + 1)..n {
            let x = filling.ray_vertex(z, filling.n_max()).expect("ray");
            let y = filling.ray_vertex(w, filling.n_max()).expect("ray");
            let prod = 0.5 * (b.values[x] + b.values[y] - filling.dist_ids(x, y) as f64);
            let ratio = base.dist(z, w) / filling.alpha().powf(-prod);
            hi = hi.max(ratio);
            lo = lo.min(ratio);
        }
    }
    hi.max(1.0 / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{build_filling, FillingParams};

    fn equilateral() -> FiniteMetricSpace {
        let d = vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]];
        FiniteMetricSpace::from_table(d, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn abc_filling() -> FillingGraph {
        let s = FiniteMetricSpace::from_points(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]], None).unwrap();
        build_filling(&s, &FillingParams::new(2.0, 4.0).with_heights(-5, 3)).unwrap()
    }

    #[test]
    fn products() {
        let s = equilateral();
        assert_eq!(gromov_product(&s, 0, 1, 2).unwrap(), 1.0);
        assert_eq!(gromov_product(&s, 1, 1, 0).unwrap(), s.dist(1, 0));
        assert_eq!(gromov_product(&s, 0, 1, 7), Err(GromovError::UnknownPoint(7)));
    }

    #[test]
    fn cross_difference_plug_in() {
        let g = abc_filling();
        let (x, z, u, o) = (3, 11, 19, 0);
        let direct = product(&g, x, x, o) + product(&g, z, u, o) - product(&g, x, z, o) - product(&g, x, u, o);
        assert_eq!(cross_difference(&g, x, x, z, u, o).unwrap(), direct);
        let a = cross_difference(&g, 2, 7, 13, 19, 0).unwrap();
        let b = cross_difference(&g, 2, 7, 13, 19, 17).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(cross_difference(&g, 2, 7, 13, 99, 0).is_err());
    }

    #[test]
    fn single_column_is_zero_hyperbolic() {
        let s = FiniteMetricSpace::from_points(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]], None).unwrap();
        let g = build_filling(&s, &FillingParams::new(2.0, 4.0).with_heights(-5, -4)).unwrap();
        assert_eq!(g.vertex_count(), 2);
        let r = hyperbolicity_delta(&g, DeltaMode::Exhaustive, 0, 0).unwrap();
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn exhaustive_guard() {
        let g = abc_filling();
        let err = hyperbolicity_delta_with_limit(&g, DeltaMode::Exhaustive, 0, 0, 10).unwrap_err();
        assert_eq!(err, GromovError::TooLargeForExhaustive { size: 20, limit: 10 });
    }

    #[test]
    fn busemann_on_abc() {
        let g = abc_filling();
        let b = busemann_values(&g, 2).unwrap();
        assert_eq!(b.depth, 8);
        assert_eq!(b.value(b.end()).unwrap(), -8.0);
        assert_eq!(b.end(), g.root());
        // the deepest vertex over c is 8 steps above the root
        assert_eq!(b.value(b.origin()).unwrap(), 0.0);
        let x = g.vertex_id(crate::Vertex::new(1, 0)).unwrap();
        assert_eq!(gromov_product_b(&g, &b, x, x).unwrap(), b.value(x).unwrap());
        assert_eq!(busemann_deviation_fit(&g, &b), 0.0);
    }
}
