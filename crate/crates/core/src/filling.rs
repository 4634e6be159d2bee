//! Truncated hyperbolic fillings.
//!
//! For every height `n` in the band `[n_min, n_max]` the filling takes the
//! greedy maximal `α^{-n}`-separated net `S_n` of the base space; vertices are
//! pairs `(z, n)` with `z ∈ S_n`. Two distinct vertices are adjacent when their
//! heights differ by at most one and their `τ`-inflated open balls share a
//! point of the base space. The intersection is tested literally over the
//! points, since a finite space is not geodesic.
//!
//! The bottom level of the band must be a single vertex, the root. It stands
//! in for the boundary point that every anchored descending ray converges to.

use rayon::prelude::*;
use std::collections::VecDeque;
use thiserror::Error;

use crate::metric::{separated_net, FiniteMetricSpace};

/// Depth margin added below the finest separation scale when the caller does
/// not fix the height band.
pub const DEFAULT_DEPTH_MARGIN: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FillingError {
    #[error("alpha must exceed 1, got {0}")]
    BadAlpha(f64),
    #[error("tau = {tau} must exceed max(3, alpha/(alpha-1)) = {bound}")]
    TauTooSmall { tau: f64, bound: f64 },
    #[error("empty height band [{n_min}, {n_max}]")]
    HeightBandEmpty { n_min: i32, n_max: i32 },
    #[error("bottom level {n_min} has {size} vertices; the band must start at a single root")]
    NoUniqueRoot { n_min: i32, size: usize },
    #[error("filling graph is disconnected: vertex {0} unreachable from vertex 0")]
    DisconnectedGraph(usize),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(Vertex),
    #[error("unknown vertex id {0}")]
    UnknownVertexId(usize),
    #[error("unknown anchor point {0}")]
    UnknownAnchor(usize),
    #[error("height {0} outside the band")]
    HeightOutOfBand(i32),
}

/// Construction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillingParams {
    pub alpha: f64,
    pub tau: f64,
    /// Explicit `(n_min, n_max)`; derived from the base space when absent.
    pub heights: Option<(i32, i32)>,
    /// Extra levels below the finest scale for derived bands.
    pub depth_margin: i32,
}

impl FillingParams {
    pub fn new(alpha: f64, tau: f64) -> Self {
        FillingParams { alpha, tau, heights: None, depth_margin: DEFAULT_DEPTH_MARGIN }
    }

    pub fn with_heights(mut self, n_min: i32, n_max: i32) -> Self {
        self.heights = Some((n_min, n_max));
        self
    }

    pub fn with_margin(mut self, margin: i32) -> Self {
        self.depth_margin = margin;
        self
    }

    pub fn tau_bound(alpha: f64) -> f64 {
        3f64.max(alpha / (alpha - 1.0))
    }

    pub fn validate(&self) -> Result<(), FillingError> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(FillingError::BadAlpha(self.alpha));
        }
        let bound = Self::tau_bound(self.alpha);
        if !(self.tau > bound) {
            return Err(FillingError::TauTooSmall { tau: self.tau, bound });
        }
        if let Some((n_min, n_max)) = self.heights {
            if n_min >= n_max {
                return Err(FillingError::HeightBandEmpty { n_min, n_max });
            }
        }
        Ok(())
    }

    /// `n_min = ⌊−log_α diam⌋ − 1`, `n_max = ⌈−log_α s_min⌉ + margin`.
    pub fn resolve_heights(&self, space: &FiniteMetricSpace) -> (i32, i32) {
        self.heights.unwrap_or_else(|| {
            let ln_a = self.alpha.ln();
            let n_min = (-space.diam().ln() / ln_a).floor() as i32 - 1;
            let n_max = (-space.s_min().ln() / ln_a).ceil() as i32 + self.depth_margin;
            (n_min, n_max)
        })
    }
}

/// A vertex `(center, height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub center: usize,
    pub height: i32,
}

impl Vertex {
    pub fn new(center: usize, height: i32) -> Self {
        Vertex { center, height }
    }
}

/// A point at real height on the fixed anchored ray of `anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicPoint {
    pub anchor: usize,
    pub height: f64,
}

/// The filling graph with all-pairs distances and anchored rays.
#[derive(Debug, Clone)]
pub struct FillingGraph {
    base: FiniteMetricSpace,
    alpha: f64,
    tau: f64,
    n_min: i32,
    n_max: i32,
    levels: Vec<Vec<usize>>,
    vertices: Vec<Vertex>,
    // level offset -> point index -> vertex id
    lookup: Vec<Vec<Option<usize>>>,
    adjacency: Vec<Vec<usize>>,
    dist: Vec<u32>,
    rays: Vec<Vec<usize>>,
    root: usize,
}

fn ball_mask(space: &FiniteMetricSpace, center: usize, radius: f64) -> Vec<u64> {
    let mut mask = vec![0u64; space.len().div_ceil(64)];
    for (y, &d) in space.row(center).iter().enumerate() {
        if d < radius {
            mask[y / 64] |= 1 << (y % 64);
        }
    }
    mask
}

fn masks_meet(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in &adjacency[v] {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs unweighted distances by one breadth-first search per source.
/// Unreachable pairs hold `u32::MAX`.
pub fn all_pairs_bfs(adjacency: &[Vec<usize>]) -> Vec<u32> {
    let rows: Vec<Vec<u32>> = (0..adjacency.len()).into_par_iter().map(|s| bfs(adjacency, s)).collect();
    rows.concat()
}

/// Builds the filling of `space`.
pub fn build_filling(space: &FiniteMetricSpace, params: &FillingParams) -> Result<FillingGraph, FillingError> {
    params.validate()?;
    let (n_min, n_max) = params.resolve_heights(space);
    if n_min >= n_max {
        return Err(FillingError::HeightBandEmpty { n_min, n_max });
    }
    let (alpha, tau) = (params.alpha, params.tau);
    let n = space.len();
    let band = (n_max - n_min + 1) as usize;

    let levels: Vec<Vec<usize>> =
        (n_min..=n_max).map(|h| separated_net(space, alpha.powi(-h)).expect("positive radius")).collect();
    if levels[0].len() != 1 {
        return Err(FillingError::NoUniqueRoot { n_min, size: levels[0].len() });
    }

    let mut vertices = Vec::new();
    let mut lookup = vec![vec![None; n]; band];
    let mut level_ids: Vec<Vec<usize>> = Vec::with_capacity(band);
    for (off, net) in levels.iter().enumerate() {
        let h = n_min + off as i32;
        let mut ids = Vec::with_capacity(net.len());
        for &z in net {
            lookup[off][z] = Some(vertices.len());
            ids.push(vertices.len());
            vertices.push(Vertex::new(z, h));
        }
        level_ids.push(ids);
    }

    let masks: Vec<Vec<u64>> =
        vertices.iter().map(|v| ball_mask(space, v.center, tau * alpha.powi(-v.height))).collect();

    let mut adjacency = vec![Vec::new(); vertices.len()];
    for off in 0..band {
        let here = &level_ids[off];
        for (a, &v) in here.iter().enumerate() {
            for &w in &here[a + 1..] {
                if masks_meet(&masks[v], &masks[w]) {
                    adjacency[v].push(w);
                    adjacency[w].push(v);
                }
            }
            if off + 1 < band {
                for &w in &level_ids[off + 1] {
                    if masks_meet(&masks[v], &masks[w]) {
                        adjacency[v].push(w);
                        adjacency[w].push(v);
                    }
                }
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    let dist = all_pairs_bfs(&adjacency);
    if let Some(unreached) = dist[..vertices.len()].iter().position(|&d| d == u32::MAX) {
        return Err(FillingError::DisconnectedGraph(unreached));
    }

    let mut graph = FillingGraph {
        base: space.clone(),
        alpha,
        tau,
        n_min,
        n_max,
        levels,
        vertices,
        lookup,
        adjacency,
        dist,
        rays: Vec::new(),
        root: level_ids[0][0],
    };
    graph.rays = (0..n).map(|z| graph.compute_ray(z)).collect();
    Ok(graph)
}

impl FillingGraph {
    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    /// Interior band `[n_min + 1, n_max − 1]` used for constant fitting.
    pub fn interior(&self) -> (i32, i32) {
        (self.n_min + 1, self.n_max - 1)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        self.vertices[id]
    }

    /// The net `S_n`.
    pub fn level(&self, height: i32) -> Option<&[usize]> {
        self.offset(height).map(|o| self.levels[o].as_slice())
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Edges `(v, w)` with `v < w`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(v, adj)| adj.iter().filter(move |&&w| w > v).map(move |&w| (v, w)))
            .collect()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    fn offset(&self, height: i32) -> Option<usize> {
        (self.n_min..=self.n_max).contains(&height).then(|| (height - self.n_min) as usize)
    }

    pub fn vertex_id(&self, v: Vertex) -> Option<usize> {
        let off = self.offset(v.height)?;
        *self.lookup[off].get(v.center)?
    }

    /// Radius `α^{-h(v)}` of the ball attached to `v`.
    pub fn radius(&self, id: usize) -> f64 {
        self.alpha.powi(-self.vertices[id].height)
    }

    /// Graph distance between vertex ids.
    #[inline]
    pub fn dist_ids(&self, v: usize, w: usize) -> u32 {
        self.dist[v * self.vertices.len() + w]
    }

    pub fn graph_distance(&self, v: Vertex, w: Vertex) -> Result<u32, FillingError> {
        let a = self.vertex_id(v).ok_or(FillingError::UnknownVertex(v))?;
        let b = self.vertex_id(w).ok_or(FillingError::UnknownVertex(w))?;
        Ok(self.dist_ids(a, b))
    }

    fn compute_ray(&self, z: usize) -> Vec<usize> {
        (0..self.levels.len())
            .map(|off| {
                let center = self.levels[off]
                    .iter()
                    .copied()
                    .min_by(|&a, &b| self.base.dist(z, a).total_cmp(&self.base.dist(z, b)).then(a.cmp(&b)))
                    .expect("nets are nonempty");
                self.lookup[off][center].expect("net point has a vertex")
            })
            .collect()
    }

    /// The fixed anchored vertical ray of `z`, one vertex id per height from
    /// `n_min` to `n_max`. Each entry is the vertex whose center is nearest to
    /// `z` at that level.
    pub fn anchored_ray(&self, z: usize) -> Result<&[usize], FillingError> {
        self.rays.get(z).map(Vec::as_slice).ok_or(FillingError::UnknownAnchor(z))
    }

    /// Ray vertex of `z` at an integer height inside the band.
    pub fn ray_vertex(&self, z: usize, height: i32) -> Result<usize, FillingError> {
        let ray = self.anchored_ray(z)?;
        let off = self.offset(height).ok_or(FillingError::HeightOutOfBand(height))?;
        Ok(ray[off])
    }

    /// The point `γ_z(t)`, with `t` clamped into the band.
    pub fn eval_ray(&self, z: usize, t: f64) -> GeodesicPoint {
        GeodesicPoint { anchor: z, height: t.clamp(self.n_min as f64, self.n_max as f64) }
    }

    /// Distance between points on anchored rays.
    ///
    /// Same anchor: the height difference. Otherwise each point is rounded to
    /// the floor or ceiling vertex of its ray and the shortest combination of
    /// fractional offsets plus vertex distance is returned. This is an upper
    /// bound within 2 of the metric-graph distance.
    pub fn point_distance(&self, p: GeodesicPoint, q: GeodesicPoint) -> Result<f64, FillingError> {
        if p.anchor >= self.base.len() {
            return Err(FillingError::UnknownAnchor(p.anchor));
        }
        if q.anchor >= self.base.len() {
            return Err(FillingError::UnknownAnchor(q.anchor));
        }
        let p = self.eval_ray(p.anchor, p.height);
        let q = self.eval_ray(q.anchor, q.height);
        if p.anchor == q.anchor {
            return Ok((p.height - q.height).abs());
        }
        let mut best = f64::INFINITY;
        for a in self.bracket(p.height) {
            for b in self.bracket(q.height) {
                let v = self.ray_vertex(p.anchor, a)?;
                let w = self.ray_vertex(q.anchor, b)?;
                let d = (p.height - a as f64).abs() + self.dist_ids(v, w) as f64 + (q.height - b as f64).abs();
                best = best.min(d);
            }
        }
        Ok(best)
    }

    /// Distance from a ray point to a vertex.
    pub fn point_vertex_distance(&self, p: GeodesicPoint, v: usize) -> Result<f64, FillingError> {
        if v >= self.vertices.len() {
            return Err(FillingError::UnknownVertexId(v));
        }
        let p = self.eval_ray(p.anchor, p.height);
        let mut best = f64::INFINITY;
        for a in self.bracket(p.height) {
            let u = self.ray_vertex(p.anchor, a)?;
            best = best.min((p.height - a as f64).abs() + self.dist_ids(u, v) as f64);
        }
        Ok(best)
    }

    fn bracket(&self, height: f64) -> impl Iterator<Item = i32> {
        let lo = height.floor() as i32;
        let hi = height.ceil() as i32;
        std::iter::once(lo).chain((hi != lo).then_some(hi))
    }

    /// Distance from a vertex to the nearest vertex on the ray of `z`.
    pub fn distance_to_ray(&self, v: usize, z: usize) -> u32 {
        self.rays[z].iter().map(|&r| self.dist_ids(v, r)).min().expect("rays are nonempty")
    }
}

/// Outcome of the structural invariant scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvariantReport {
    /// Every point lies within `α^{-n}` of some center of `S_n`.
    pub covering: bool,
    /// Centers of `S_n` are pairwise at least `α^{-n}` apart.
    pub separation: bool,
    /// Levels finer than the smallest distance contain every point.
    pub saturation: bool,
    pub connected: bool,
    /// Adjacent vertices differ in height by at most one.
    pub height_lipschitz: bool,
}

impl InvariantReport {
    pub fn all(&self) -> bool {
        self.covering && self.separation && self.saturation && self.connected && self.height_lipschitz
    }
}

impl FillingGraph {
    /// Rescans the stored levels and edges.
    pub fn check_invariants(&self) -> InvariantReport {
        let space = &self.base;
        let mut report = InvariantReport {
            covering: true,
            separation: true,
            saturation: true,
            connected: !self.dist.contains(&u32::MAX),
            height_lipschitz: true,
        };
        for (off, net) in self.levels.iter().enumerate() {
            let r = self.alpha.powi(-(self.n_min + off as i32));
            report.covering &= (0..space.len()).all(|x| net.iter().any(|&c| space.dist(x, c) < r));
            report.separation &=
                net.iter().enumerate().all(|(a, &p)| net[a + 1..].iter().all(|&q| space.dist(p, q) >= r));
            if r < space.s_min() {
                report.saturation &= net.len() == space.len();
            }
        }
        report.height_lipschitz =
            self.edges().iter().all(|&(v, w)| (self.vertices[v].height - self.vertices[w].height).abs() <= 1);
        report
    }
}
