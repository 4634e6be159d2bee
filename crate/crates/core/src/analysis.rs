//! Quantitative checks on vertex maps between fillings.
//!
//! Every constant that the theory leaves abstract is measured here as an
//! empirical maximum: additive constants of rough quasi-isometric envelopes,
//! coboundedness radii, strong power quasi-isometry defects, closeness of
//! images to target rays, and the λ of recovered boundary controls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

use crate::cone::{cone_distance, ConePoint};
use crate::extension::{
    build_phi_set, extend_map, hat_f, phi_eval, sigma, sigma_inverse, snap_to_vertices, ExtensionError,
    ExtensionResult, PhiTable,
};
use crate::filling::{build_filling, FillingError, FillingGraph, FillingParams};
use crate::gromov::cross_difference;
use crate::metric::FiniteMetricSpace;
use crate::qsmap::{qs_check, qs_fit_lambda, qs_fit_lambda_with, qs_fit_theta, PointMap, PowerControl, QsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("vertex map is empty or has no vertices in scope")]
    EmptyMap,
    #[error("vertex map has {got} entries for {expected} source vertices")]
    MapSize { got: usize, expected: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("image of the root sits at height {height}, above the bottom-quarter limit {limit}")]
    OmegaDirectionViolated { height: i32, limit: f64 },
    #[error("input map fails its own control: {0}")]
    InputNotQuasiSymmetric(String),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Filling(#[from] FillingError),
    #[error(transparent)]
    Qs(#[from] QsError),
}

/// Which source vertex pairs a scan covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairScope {
    /// Heights in `[n_min + 1, n_max − 1]`.
    Interior,
    All,
}

fn scoped_vertices(g: &FillingGraph, scope: PairScope) -> Vec<usize> {
    let (lo, hi) = match scope {
        PairScope::Interior => g.interior(),
        PairScope::All => (g.n_min(), g.n_max()),
    };
    (0..g.vertex_count()).filter(|&v| (lo..=hi).contains(&g.vertex(v).height)).collect()
}

/// Fitted `(L1, L2, k)` envelope with coboundedness radius.
#[derive(Debug, Clone, PartialEq)]
pub struct QIEnvelope {
    pub l1: f64,
    pub l2: f64,
    /// Minimal additive constant for the given slopes.
    pub k: f64,
    /// Largest distance from a target vertex to the image.
    pub cobound: f64,
    /// Source pair attaining `k`.
    pub witness: Option<(usize, usize)>,
}

impl QIEnvelope {
    /// Rough quasi-isometry constant covering both distortion and coboundedness.
    pub fn constant(&self) -> f64 {
        self.k.max(self.cobound)
    }
}

/// Envelope over interior source pairs.
pub fn qi_envelope(
    g: &[usize],
    xz: &FillingGraph,
    xw: &FillingGraph,
    l1: f64,
    l2: f64,
) -> Result<QIEnvelope, AnalysisError> {
    qi_envelope_scoped(g, xz, xw, l1, l2, PairScope::Interior)
}

/// `k = max max(L1·d − d′, d′ − L2·d, 0)` over source pairs in `scope`;
/// `cobound` over all target vertices against the image of all source vertices.
pub fn qi_envelope_scoped(
    g: &[usize],
    xz: &FillingGraph,
    xw: &FillingGraph,
    l1: f64,
    l2: f64,
    scope: PairScope,
) -> Result<QIEnvelope, AnalysisError> {
    if !(l1 > 0.0 && l2 >= l1) {
        return Err(AnalysisError::BadParams(format!("need 0 < L1 ≤ L2, got ({l1}, {l2})")));
    }
    if g.is_empty() {
        return Err(AnalysisError::EmptyMap);
    }
    if g.len() != xz.vertex_count() {
        return Err(AnalysisError::MapSize { got: g.len(), expected: xz.vertex_count() });
    }
    let verts = scoped_vertices(xz, scope);
    if verts.is_empty() {
        return Err(AnalysisError::EmptyMap);
    }
    let none: (f64, Option<(usize, usize)>) = (0.0, None);
    let pick = |a: (f64, Option<(usize, usize)>), b: (f64, Option<(usize, usize)>)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1.is_some() && (a.1.is_none() || b.1 < a.1)) {
            b
        } else {
            a
        }
    };
    let (k, witness) = verts
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut best = none;
            for &w in &verts[i + 1..] {
                let d = xz.dist_ids(v, w) as f64;
                let dp = xw.dist_ids(g[v], g[w]) as f64;
                let gap = (l1 * d - dp).max(dp - l2 * d);
                if gap > 0.0 {
                    best = pick(best, (gap, Some((v, w))));
                }
            }
            best
        })
        .reduce(|| none, pick);

    let mut image: Vec<usize> = g.to_vec();
    image.sort_unstable();
    image.dedup();
    let cobound = (0..xw.vertex_count())
        .into_par_iter()
        .map(|w| image.iter().map(|&u| xw.dist_ids(w, u)).min().unwrap_or(u32::MAX) as f64)
        .reduce(|| 0.0, f64::max);

    Ok(QIEnvelope { l1, l2, k, cobound, witness })
}

/// `L1 = ln α_Z / (θ ln α_W)`, `L2 = θ ln α_Z / ln α_W`.
pub fn predicted_slopes(theta: f64, alpha_z: f64, alpha_w: f64) -> Result<(f64, f64), AnalysisError> {
    if !(theta >= 1.0) || !(alpha_z > 1.0) || !(alpha_w > 1.0) {
        return Err(AnalysisError::BadParams(format!("θ = {theta}, α_Z = {alpha_z}, α_W = {alpha_w}")));
    }
    let r = alpha_z.ln() / alpha_w.ln();
    Ok((r / theta, r * theta))
}

/// `θ_i = (ln α_W / ln α_Z) L_i`.
pub fn predicted_exponents(l1: f64, l2: f64, alpha_z: f64, alpha_w: f64) -> Result<(f64, f64), AnalysisError> {
    if !(l1 > 0.0 && l2 >= l1) || !(alpha_z > 1.0) || !(alpha_w > 1.0) {
        return Err(AnalysisError::BadParams(format!("L = ({l1}, {l2}), α_Z = {alpha_z}, α_W = {alpha_w}")));
    }
    let r = alpha_z.ln() / alpha_w.ln();
    Ok((l1 / r, l2 / r))
}

/// Slopes and additive constant of `g ∘ f` for an `(α₁, α₂, k₁)` map `f`
/// followed by an `(α₃, α₄, k₂)` map `g`: `((α₁α₃, α₂α₄), α₄(k₁+1) + 2k₂ + 1)`.
pub fn composition_constant(first: (f64, f64, f64), second: (f64, f64, f64)) -> ((f64, f64), f64) {
    let (a1, a2, k1) = first;
    let (a3, a4, k2) = second;
    ((a1 * a3, a2 * a4), a4 * (k1 + 1.0) + 2.0 * k2 + 1.0)
}

/// Composition of vertex maps, `second ∘ first`.
pub fn compose_vertex_maps(first: &[usize], second: &[usize]) -> Vec<usize> {
    first.iter().map(|&v| second[v]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongQiReport {
    pub d_fit: f64,
    /// Quadruples with nonnegative cross-difference that were compared.
    pub checked: usize,
    pub witness: Option<[usize; 4]>,
}

/// Sampled strong power quasi-isometry defect: over seeded interior
/// quadruples with `⟨x,y,z,u⟩ ≥ 0`, the largest violation of
/// `c1·⟨x,y,z,u⟩ − d ≤ ⟨Gx,Gy,Gz,Gu⟩ ≤ c2·⟨x,y,z,u⟩ + d`.
#[allow(clippy::too_many_arguments)]
pub fn strong_qi_check(
    g: &[usize],
    xz: &FillingGraph,
    xw: &FillingGraph,
    c1: f64,
    c2: f64,
    sample_count: usize,
    seed: u64,
) -> Result<StrongQiReport, AnalysisError> {
    if !(c1 > 0.0 && c2 >= c1) {
        return Err(AnalysisError::BadParams(format!("need 0 < c1 ≤ c2, got ({c1}, {c2})")));
    }
    if g.len() != xz.vertex_count() {
        return Err(AnalysisError::MapSize { got: g.len(), expected: xz.vertex_count() });
    }
    let verts = scoped_vertices(xz, PairScope::Interior);
    if verts.is_empty() {
        return Err(AnalysisError::EmptyMap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (oz, ow) = (xz.root(), xw.root());
    let mut report = StrongQiReport { d_fit: 0.0, checked: 0, witness: None };
    for _ in 0..sample_count {
        let q: [usize; 4] = std::array::from_fn(|_| verts[rng.gen_range(0..verts.len())]);
        let src = cross_difference(xz, q[0], q[1], q[2], q[3], oz).expect("ids in range");
        if src < 0.0 {
            continue;
        }
        let dst = cross_difference(xw, g[q[0]], g[q[1]], g[q[2]], g[q[3]], ow).expect("ids in range");
        report.checked += 1;
        let gap = (c1 * src - dst).max(dst - c2 * src);
        if gap > report.d_fit {
            report.d_fit = gap;
            report.witness = Some(q);
        }
    }
    Ok(report)
}

/// Boundary map read off a vertex map.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResult {
    pub forward: Vec<usize>,
    /// Per base point, the largest distance from an interior image of its ray
    /// to the ray of its boundary image.
    pub mu: Vec<f64>,
    pub bijective: bool,
    /// Height of the image of the source root.
    pub omega_height: i32,
}

impl BoundaryResult {
    pub fn to_point_map(
        &self,
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
    ) -> Result<PointMap, QsError> {
        PointMap::new(source, target, self.forward.clone())
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }
}

/// Extracts the boundary map of `g`.
///
/// For each base point `z` the candidate `w` minimizes, in order: the graph
/// distance from `g(ray_z(n_max))` to `ray_w(n_max)`, the distance from the
/// same image to the whole ray of `w`, and the index `w`.
pub fn boundary_map(g: &[usize], xz: &FillingGraph, xw: &FillingGraph) -> Result<BoundaryResult, AnalysisError> {
    if g.len() != xz.vertex_count() {
        return Err(AnalysisError::MapSize { got: g.len(), expected: xz.vertex_count() });
    }
    let omega_height = xw.vertex(g[xz.root()]).height;
    let limit = xw.n_min() as f64 + 0.25 * (xw.n_max() - xw.n_min()) as f64;
    if omega_height as f64 > limit {
        return Err(AnalysisError::OmegaDirectionViolated { height: omega_height, limit });
    }
    let nz = xz.base().len();
    let nw = xw.base().len();
    let (lo, hi) = xz.interior();
    let mut forward = Vec::with_capacity(nz);
    let mut mu = Vec::with_capacity(nz);
    for z in 0..nz {
        let x = g[xz.ray_vertex(z, xz.n_max())?];
        let w = (0..nw)
            .min_by_key(|&w| {
                let tip = xw.ray_vertex(w, xw.n_max()).expect("band top");
                (xw.dist_ids(x, tip), xw.distance_to_ray(x, w), w)
            })
            .expect("target is nonempty");
        let mut worst = 0.0f64;
        for h in lo..=hi {
            let image = g[xz.ray_vertex(z, h)?];
            worst = worst.max(xw.distance_to_ray(image, w) as f64);
        }
        forward.push(w);
        mu.push(worst);
    }
    let mut seen = vec![false; nw];
    let bijective = nz == nw && forward.iter().all(|&w| !std::mem::replace(&mut seen[w], true));
    Ok(BoundaryResult { forward, mu, bijective, omega_height })
}

/// Largest `| |σp − σq| − ρ(p, q)/ln α |` over `p = σ⁻¹(v)`, `q = σ⁻¹(w)`
/// for vertex pairs in `scope`.
pub fn sigma_similarity_fit(xz: &FillingGraph, scope: PairScope) -> Result<f64, AnalysisError> {
    let verts = scoped_vertices(xz, scope);
    let pre: Vec<ConePoint> = verts.iter().map(|&v| sigma_inverse(xz, v)).collect::<Result<_, _>>()?;
    let ln_a = xz.alpha().ln();
    let base = xz.base();
    let worst = (0..verts.len())
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            for j in (i + 1)..verts.len() {
                let graph = xz.point_distance(sigma(xz, pre[i]), sigma(xz, pre[j])).expect("anchors in range");
                let cone = cone_distance(base, pre[i], pre[j]).expect("valid cone points") / ln_a;
                worst = worst.max((graph - cone).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Largest `|σ(σ⁻¹(v)) − v|` over all vertices.
pub fn sigma_displacement_fit(xz: &FillingGraph) -> Result<f64, AnalysisError> {
    let mut worst = 0.0f64;
    for v in 0..xz.vertex_count() {
        let p = sigma(xz, sigma_inverse(xz, v)?);
        worst = worst.max(xz.point_vertex_distance(p, v)?);
    }
    Ok(worst)
}

/// Largest `|Φ_x(−log₂ t) − Φ_y(−log₂ t)|` over distinct `x, y` and a
/// logarithmic grid of `t ∈ [d(x, y), 4·diam]`.
pub fn phi_closeness_fit(space: &FiniteMetricSpace, phis: &[PhiTable], grid: usize) -> f64 {
    let n = space.len();
    let top = (4.0 * space.diam()).log2();
    let grid = grid.max(2);
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0.0f64;
            for y in 0..n {
                if y == x {
                    continue;
                }
                let bottom = space.dist(x, y).log2();
                for i in 0..grid {
                    let u = bottom + (top - bottom) * i as f64 / (grid - 1) as f64;
                    worst = worst.max((phi_eval(&phis[x], -u) - phi_eval(&phis[y], -u)).abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Secant slopes and rough-QI additive constant of one Φ table on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEnvelope {
    pub min_slope: f64,
    pub max_slope: f64,
    /// Additive constant at slopes `(1/θ, θ)`.
    pub mu0: f64,
}

pub fn phi_envelope(table: &PhiTable, theta: f64, range: (f64, f64), grid: usize) -> PhiEnvelope {
    let grid = grid.max(2);
    let ts: Vec<f64> = (0..grid).map(|i| range.0 + (range.1 - range.0) * i as f64 / (grid - 1) as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| phi_eval(table, t)).collect();
    let mut env = PhiEnvelope { min_slope: f64::INFINITY, max_slope: f64::NEG_INFINITY, mu0: 0.0 };
    for i in 0..grid {
        for j in (i + 1)..grid {
            let dt = ts[j] - ts[i];
            let dv = vals[j] - vals[i];
            env.min_slope = env.min_slope.min(dv / dt);
            env.max_slope = env.max_slope.max(dv / dt);
            env.mu0 = env.mu0.max((dt / theta - dv.abs()).max(dv.abs() - theta * dt));
        }
    }
    env
}

/// Additive constant of `f̂` at slopes `(1/θ, θ)` over seeded cone-point
/// pairs with `−log₂ scale` uniform in `log_range`.
pub fn cone_map_envelope(
    map: &PointMap,
    phis: &[PhiTable],
    theta: f64,
    log_range: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<f64, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = map.len();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut draw = || -> Result<ConePoint, AnalysisError> {
            let u = rng.gen_range(log_range.0..=log_range.1);
            Ok(ConePoint::new(rng.gen_range(0..n), (-u).exp2()).map_err(ExtensionError::from)?)
        };
        let (p, q) = (draw()?, draw()?);
        let d = cone_distance(map.source(), p, q).map_err(ExtensionError::from)?;
        let dp =
            cone_distance(map.target(), hat_f(map, phis, p)?, hat_f(map, phis, q)?).map_err(ExtensionError::from)?;
        worst = worst.max((d / theta - dp).max(dp - theta * d));
    }
    Ok(worst)
}

/// Largest `|h(F_e(v)) − (ln 2/ln α_W)·Φ_{z₀}(h(v)·log₂ α_Z)|` over all vertices,
/// recomputed straight from the Φ tables.
pub fn height_formula_error(ext: &ExtensionResult, xz: &FillingGraph, xw: &FillingGraph, phis: &[PhiTable]) -> f64 {
    let scale = 2f64.ln() / xw.alpha().ln();
    (0..xz.vertex_count())
        .map(|v| {
            let h = xz.vertex(v).height as f64;
            let predicted = scale * phi_eval(&phis[ext.preimage[v]], h * xz.alpha().log2());
            (ext.raw_heights[v] - predicted).abs()
        })
        .fold(0.0, f64::max)
}

/// Fillings, Φ tables and the snapped extension of one map.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub map: PointMap,
    pub xz: FillingGraph,
    pub xw: FillingGraph,
    pub phis: Vec<PhiTable>,
    pub extension: ExtensionResult,
}

impl Pipeline {
    pub fn vertex_map(&self) -> &[usize] {
        &self.extension.vertex_map
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub alpha_z: f64,
    pub alpha_w: f64,
    pub tau_z: f64,
    pub tau_w: f64,
    pub depth: i32,
}

impl PipelineConfig {
    pub fn uniform(alpha: f64, tau: f64, depth: i32) -> Self {
        PipelineConfig { alpha_z: alpha, alpha_w: alpha, tau_z: tau, tau_w: tau, depth }
    }
}

pub fn run_pipeline(map: &PointMap, cfg: &PipelineConfig) -> Result<Pipeline, AnalysisError> {
    let xz = build_filling(map.source(), &FillingParams::new(cfg.alpha_z, cfg.tau_z).with_margin(cfg.depth))?;
    let xw = build_filling(map.target(), &FillingParams::new(cfg.alpha_w, cfg.tau_w).with_margin(cfg.depth))?;
    let phis = build_phi_set(map)?;
    let raw = extend_map(map, &xz, &xw, &phis)?;
    let extension = snap_to_vertices(&xw, raw)?;
    Ok(Pipeline { map: map.clone(), xz, xw, phis, extension })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripReport {
    pub theta: f64,
    /// Fitted λ of the input at `(1/θ, θ)`.
    pub lambda: f64,
    pub config: PipelineConfig,
    pub band_z: (i32, i32),
    pub band_w: (i32, i32),
    pub slopes: (f64, f64),
    pub envelope: QIEnvelope,
    pub snap_deviation: f64,
    pub height_formula_error: f64,
    pub boundary: BoundaryResult,
    pub boundary_matches: bool,
    pub exponents: (f64, f64),
    /// Fitted λ of the recovered map at `(θ₁, θ₂)`.
    pub lambda_fit: Option<f64>,
    pub recovered_passes: bool,
    /// Smallest symmetric θ passing for the recovered map at the input λ.
    pub theta_fit: Option<f64>,
}

impl RoundTripReport {
    pub fn passed(&self) -> bool {
        self.boundary.bijective && self.boundary_matches && self.recovered_passes && self.envelope.k.is_finite()
    }
}

/// Extension, envelope at the predicted slopes, boundary extraction and
/// exponent recovery for one power quasi-symmetric map.
pub fn roundtrip(map: &PointMap, theta: f64, cfg: &PipelineConfig, tol: f64) -> Result<RoundTripReport, AnalysisError> {
    let lambda = qs_fit_lambda(map, theta).max(1.0);
    let check = qs_check(map, &PowerControl::symmetric(theta, lambda)?);
    if !check.passed {
        return Err(AnalysisError::InputNotQuasiSymmetric(format!("worst ratio {}", check.worst_ratio)));
    }
    let pipe = run_pipeline(map, cfg)?;
    let slopes = predicted_slopes(theta, cfg.alpha_z, cfg.alpha_w)?;
    let g = pipe.vertex_map();
    let envelope = qi_envelope(g, &pipe.xz, &pipe.xw, slopes.0, slopes.1)?;
    let boundary = boundary_map(g, &pipe.xz, &pipe.xw)?;
    let exponents = predicted_exponents(slopes.0, slopes.1, cfg.alpha_z, cfg.alpha_w)?;
    let (mut lambda_fit, mut recovered_passes, mut theta_fit) = (None, false, None);
    if boundary.bijective {
        let recovered = boundary.to_point_map(map.source_arc(), map.target_arc())?;
        let fit = qs_fit_lambda_with(&recovered, exponents.0, exponents.1);
        let ctrl = PowerControl::new(exponents.0, exponents.1, fit.max(1.0))?;
        recovered_passes = qs_check(&recovered, &ctrl).passed;
        lambda_fit = Some(fit);
        theta_fit = qs_fit_theta(&recovered, lambda, tol).ok();
    }
    Ok(RoundTripReport {
        theta,
        lambda,
        config: *cfg,
        band_z: (pipe.xz.n_min(), pipe.xz.n_max()),
        band_w: (pipe.xw.n_min(), pipe.xw.n_max()),
        slopes,
        snap_deviation: pipe.extension.snap_deviation.unwrap_or(f64::NAN),
        height_formula_error: height_formula_error(&pipe.extension, &pipe.xz, &pipe.xw, &pipe.phis),
        boundary_matches: boundary.forward == map.forward(),
        envelope,
        boundary,
        exponents,
        lambda_fit,
        recovered_passes,
        theta_fit,
    })
}

/// Perturbs every image by one vertical step along its own ray (down where
/// possible, otherwise up). Used to check that bounded perturbations keep
/// the boundary map.
pub fn vertical_perturbation(g: &[usize], xw: &FillingGraph) -> Vec<usize> {
    g.iter()
        .map(|&u| {
            let v = xw.vertex(u);
            let step = if v.height > xw.n_min() { v.height - 1 } else { v.height + 1 };
            // the center's own ray passes through u
            let id = xw.ray_vertex(v.center, step).expect("in band");
            debug_assert!(xw.dist_ids(u, id) <= 1);
            id
        })
        .collect()
}
