//! Extension of a boundary map to the fillings.
//!
//! The pipeline is `F_e = σ′ ∘ f̂ ∘ σ⁻¹`:
//!
//! 1. `σ⁻¹` sends a vertex `v` to the cone point `(z₀, α_Z^{-h(v)})`, where
//!    `z₀` is the smallest point whose fixed ray passes through `v`.
//! 2. `f̂(z, t) = (f(z), 2^{-Φ_z(-log₂ t)})` moves along cone rays.
//! 3. `σ′(w, s)` is the point of height `-ln s / ln α_W` on the ray of `w`.
//!
//! [`snap_to_vertices`] then rounds each image to a vertex on the same ray.

use thiserror::Error;

use crate::cone::{ConeError, ConePoint};
use crate::filling::{FillingError, FillingGraph, GeodesicPoint};
use crate::qsmap::PointMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error("point {0} has no distinct neighbor")]
    DegeneratePoint(usize),
    #[error("unknown point {0}")]
    UnknownPoint(usize),
    #[error("filling base does not match the map's {0} space")]
    SpaceMismatch(&'static str),
    #[error("extension has not been snapped to vertices")]
    NotSnapped,
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Filling(#[from] FillingError),
}

/// Piecewise-linear nondecreasing function given by knots in base-2 log
/// units, extended linearly past both ends with `tail_slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    pub point: usize,
    /// `(t_i, φ_i)`, strictly increasing in `t`, nondecreasing in `φ`.
    pub knots: Vec<(f64, f64)>,
    pub tail_slope: f64,
}

impl PhiTable {
    pub fn eval(&self, t: f64) -> f64 {
        phi_eval(self, t)
    }
}

/// Builds `Φ_z` from the distortion profile of `f` around `z`.
///
/// For each distinct distance `r` from `z`, `L(r)` is the largest image
/// distance `d_W(f z, f y)` over `y ≠ z` with `d_Z(z, y) ≤ r`; the knot is
/// `(−log₂ r, −log₂ L(r))`. Both tails continue with the secant slope of the
/// knot table, or slope 1 when that secant is degenerate.
pub fn build_phi(map: &PointMap, z: usize) -> Result<PhiTable, ExtensionError> {
    let (src, dst) = (map.source(), map.target());
    if z >= src.len() {
        return Err(ExtensionError::UnknownPoint(z));
    }
    let fz = map.apply(z);
    let mut pairs: Vec<(f64, f64)> =
        (0..src.len()).filter(|&y| y != z).map(|y| (src.dist(z, y), dst.dist(fz, map.apply(y)))).collect();
    if pairs.is_empty() {
        return Err(ExtensionError::DegeneratePoint(z));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // ascending r with running max of image distances
    let mut profile: Vec<(f64, f64)> = Vec::new();
    let mut running = 0.0f64;
    for (r, img) in pairs {
        running = running.max(img);
        match profile.last_mut() {
            Some(last) if last.0 == r => last.1 = running,
            _ => profile.push((r, running)),
        }
    }
    let knots: Vec<(f64, f64)> = profile.iter().rev().map(|&(r, l)| (-r.log2(), -l.log2())).collect();

    let tail_slope = match (knots.first(), knots.last()) {
        (Some(a), Some(b)) if knots.len() > 1 => {
            let s = (b.1 - a.1) / (b.0 - a.0);
            if s.is_finite() && s > 0.0 {
                s
            } else {
                1.0
            }
        }
        _ => 1.0,
    };
    Ok(PhiTable { point: z, knots, tail_slope })
}

/// One table per source point.
pub fn build_phi_set(map: &PointMap) -> Result<Vec<PhiTable>, ExtensionError> {
    (0..map.len()).map(|z| build_phi(map, z)).collect()
}

pub fn phi_eval(table: &PhiTable, t: f64) -> f64 {
    let k = &table.knots;
    let (t0, p0) = k[0];
    let (tn, pn) = k[k.len() - 1];
    if t <= t0 {
        return p0 + table.tail_slope * (t - t0);
    }
    if t >= tn {
        return pn + table.tail_slope * (t - tn);
    }
    let i = k.partition_point(|&(ti, _)| ti <= t);
    let (ta, pa) = k[i - 1];
    if ta == t {
        return pa;
    }
    let (tb, pb) = k[i];
    pa + (pb - pa) * (t - ta) / (tb - ta)
}

/// `f̂(z, t) = (f(z), 2^{−Φ_z(−log₂ t)})`.
pub fn hat_f(map: &PointMap, phis: &[PhiTable], p: ConePoint) -> Result<ConePoint, ExtensionError> {
    let p = ConePoint::new(p.point, p.scale)?;
    let table = phis.get(p.point).ok_or(ExtensionError::UnknownPoint(p.point))?;
    let scale = (-phi_eval(table, -p.scale.log2())).exp2();
    Ok(ConePoint::new(map.apply(p.point), scale)?)
}

/// Height `−ln s / ln α` before clamping.
pub fn sigma_height(filling: &FillingGraph, p: ConePoint) -> f64 {
    -p.scale.ln() / filling.alpha().ln()
}

/// `σ(z, s) = γ_z(−ln s / ln α)`.
pub fn sigma(filling: &FillingGraph, p: ConePoint) -> GeodesicPoint {
    filling.eval_ray(p.point, sigma_height(filling, p))
}

/// Rough inverse of σ on vertices.
pub fn sigma_inverse(filling: &FillingGraph, v: usize) -> Result<ConePoint, ExtensionError> {
    if v >= filling.vertex_count() {
        return Err(FillingError::UnknownVertexId(v).into());
    }
    let vert = filling.vertex(v);
    let base = filling.base();
    let anchored = (0..base.len()).find(|&z| filling.ray_vertex(z, vert.height).ok() == Some(v));
    let z0 = anchored.unwrap_or_else(|| {
        (0..base.len())
            .min_by(|&a, &b| base.dist(a, vert.center).total_cmp(&base.dist(b, vert.center)).then(a.cmp(&b)))
            .expect("space is nonempty")
    });
    Ok(ConePoint::new(z0, filling.alpha().powi(-vert.height))?)
}

/// Raw and snapped images of every source vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    /// `σ⁻¹` preimage point `z₀` per source vertex.
    pub preimage: Vec<usize>,
    /// `F_e(v)` with clamped height.
    pub geodesic_map: Vec<GeodesicPoint>,
    /// `h(F_e(v))` before clamping.
    pub raw_heights: Vec<f64>,
    /// Snapped `F(v)` as target vertex ids; empty until snapped.
    pub vertex_map: Vec<usize>,
    /// `max_v |F_e(v) − F(v)|`, set by snapping.
    pub snap_deviation: Option<f64>,
}

impl ExtensionResult {
    pub fn vertex_map(&self) -> Result<&[usize], ExtensionError> {
        if self.snap_deviation.is_none() {
            return Err(ExtensionError::NotSnapped);
        }
        Ok(&self.vertex_map)
    }
}

/// Applies `σ′ ∘ f̂ ∘ σ⁻¹` to every vertex of `xz`.
pub fn extend_map(
    map: &PointMap,
    xz: &FillingGraph,
    xw: &FillingGraph,
    phis: &[PhiTable],
) -> Result<ExtensionResult, ExtensionError> {
    if xz.base() != map.source() {
        return Err(ExtensionError::SpaceMismatch("source"));
    }
    if xw.base() != map.target() {
        return Err(ExtensionError::SpaceMismatch("target"));
    }
    let n = xz.vertex_count();
    let mut out = ExtensionResult {
        preimage: Vec::with_capacity(n),
        geodesic_map: Vec::with_capacity(n),
        raw_heights: Vec::with_capacity(n),
        vertex_map: Vec::new(),
        snap_deviation: None,
    };
    for v in 0..n {
        let pre = sigma_inverse(xz, v)?;
        let image = hat_f(map, phis, pre)?;
        out.preimage.push(pre.point);
        out.raw_heights.push(sigma_height(xw, image));
        out.geodesic_map.push(sigma(xw, image));
    }
    Ok(out)
}

/// Rounds each image height to the nearest integer, ties downward, and takes
/// the vertex at that height on the image's own ray.
pub fn snap_to_vertices(xw: &FillingGraph, mut raw: ExtensionResult) -> Result<ExtensionResult, ExtensionError> {
    let mut worst = 0.0f64;
    let mut vertex_map = Vec::with_capacity(raw.geodesic_map.len());
    for p in &raw.geodesic_map {
        let h = (p.height - 0.5).ceil() as i32;
        vertex_map.push(xw.ray_vertex(p.anchor, h)?);
        let dev = xw.point_distance(*p, GeodesicPoint { anchor: p.anchor, height: h as f64 })?;
        worst = worst.max(dev);
    }
    raw.vertex_map = vertex_map;
    raw.snap_deviation = Some(worst);
    Ok(raw)
}
