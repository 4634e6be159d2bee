//! JSON file formats and DOT export.
//!
//! One JSON object per file, UTF-8, pretty-printed.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

use crate::filling::{all_pairs_bfs, FillingGraph};
use crate::gromov::DistanceMatrix;
use crate::metric::{FiniteMetricSpace, MetricError};
use crate::qsmap::{PointMap, QsError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Metric { path: PathBuf, source: MetricError },
    #[error("{path}: {source}")]
    Map { path: PathBuf, source: QsError },
}

impl IoError {
    /// Validation failures as opposed to unreadable or malformed files.
    pub fn is_domain(&self) -> bool {
        matches!(self, IoError::Metric { .. } | IoError::Map { .. })
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| IoError::Parse { path: path.into(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| IoError::Parse { path: path.into(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.into(), source })
}

/// Space file: either an explicit table or planar points.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SpaceFile {
    Table {
        labels: Vec<String>,
        dist: Vec<Vec<f64>>,
    },
    Points {
        points: Vec<[f64; 2]>,
        metric: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

impl SpaceFile {
    pub fn from_space(space: &FiniteMetricSpace) -> Self {
        SpaceFile::Table { labels: space.labels().to_vec(), dist: space.to_table() }
    }

    pub fn into_space(self) -> Result<FiniteMetricSpace, SpaceFileError> {
        match self {
            SpaceFile::Table { labels, dist } => Ok(FiniteMetricSpace::from_table(dist, labels)?),
            SpaceFile::Points { points, metric, labels } => {
                if metric != "euclidean" {
                    return Err(SpaceFileError::UnknownMetric(metric));
                }
                Ok(FiniteMetricSpace::from_points(&points, labels)?)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum SpaceFileError {
    #[error("unsupported metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub fn load_space(path: &Path) -> Result<FiniteMetricSpace, IoError> {
    let file: SpaceFile = read_json(path)?;
    file.into_space().map_err(|e| match e {
        SpaceFileError::UnknownMetric(m) => {
            IoError::Format { path: path.into(), message: format!("unsupported metric `{m}`") }
        }
        SpaceFileError::Metric(source) => IoError::Metric { path: path.into(), source },
    })
}

pub fn save_space(path: &Path, space: &FiniteMetricSpace) -> Result<(), IoError> {
    write_json(path, &SpaceFile::from_space(space))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct VertexEntry {
    pub id: usize,
    pub center: usize,
    pub height: i32,
}

/// Filling file: parameters, vertices and edges.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FillingFile {
    pub alpha: f64,
    pub tau: f64,
    pub n_min: i32,
    pub n_max: i32,
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<[usize; 2]>,
}

impl FillingFile {
    pub fn from_graph(g: &FillingGraph) -> Self {
        FillingFile {
            alpha: g.alpha(),
            tau: g.tau(),
            n_min: g.n_min(),
            n_max: g.n_max(),
            vertices: g
                .vertices()
                .iter()
                .enumerate()
                .map(|(id, v)| VertexEntry { id, center: v.center, height: v.height })
                .collect(),
            edges: g.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }

    /// Sorted adjacency lists indexed by vertex id.
    pub fn adjacency(&self) -> Result<Vec<Vec<usize>>, String> {
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.id != i {
                return Err(format!("vertex ids must be 0..{n} in order; entry {i} has id {}", v.id));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &[a, b] in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(format!("bad edge [{a}, {b}]"));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(adj)
    }

    /// Graph metric of the stored edges.
    pub fn distance_matrix(&self) -> Result<DistanceMatrix, String> {
        let adj = self.adjacency()?;
        let n = adj.len();
        let raw = all_pairs_bfs(&adj);
        if raw.contains(&u32::MAX) {
            return Err("stored graph is disconnected".into());
        }
        Ok(DistanceMatrix::new(n, raw.into_iter().map(f64::from).collect()))
    }
}

/// Graphviz export; nodes labelled `center@height`.
pub fn to_dot(g: &FillingGraph) -> String {
    let mut out = String::from("graph filling {\n");
    for (id, v) in g.vertices().iter().enumerate() {
        let _ = writeln!(out, "  v{id} [label=\"{}@{}\"];", v.center, v.height);
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  v{a} -- v{b};");
    }
    out.push_str("}\n");
    out
}

/// Map file; `source` and `target` are space files, relative to the map file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MapFile {
    pub source: String,
    pub target: String,
    pub forward: Vec<usize>,
}

pub fn load_map(path: &Path) -> Result<PointMap, IoError> {
    let file: MapFile = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let source = Arc::new(load_space(&dir.join(&file.source))?);
    let target = Arc::new(load_space(&dir.join(&file.target))?);
    PointMap::new(source, target, file.forward).map_err(|source| IoError::Map { path: path.into(), source })
}

/// Delta report file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DeltaReportFile {
    pub delta: f64,
    pub mode: String,
    pub witness: Vec<usize>,
    pub nu_fit: Option<f64>,
    #[serde(rename = "compare_C_fit")]
    pub compare_c_fit: Option<f64>,
}

/// Extension file: snapped vertex map, raw ray points and fitted constants.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtensionFile {
    pub vertex_map: Vec<[usize; 2]>,
    pub geodesic_map: Vec<(usize, usize, f64)>,
    pub constants: BTreeMap<String, f64>,
}

impl ExtensionFile {
    /// Vertex map as a dense table over source ids.
    pub fn dense_vertex_map(&self, source_vertices: usize) -> Result<Vec<usize>, String> {
        let mut out = vec![usize::MAX; source_vertices];
        for &[s, d] in &self.vertex_map {
            if s >= source_vertices {
                return Err(format!("source id {s} out of range"));
            }
            out[s] = d;
        }
        match out.iter().position(|&d| d == usize::MAX) {
            Some(missing) => Err(format!("no image for source vertex {missing}")),
            None => Ok(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{build_filling, FillingParams};
    use crate::metric::{generate_space, SpaceKind};

    #[test]
    fn points_file_is_accepted() {
        let json = r#"{ "points": [[0,0],[3,4],[6,8]], "metric": "euclidean" }"#;
        let file: SpaceFile = serde_json::from_str(json).unwrap();
        let s = file.into_space().unwrap();
        assert_eq!(s.dist(0, 1), 5.0);
        let bad = r#"{ "points": [[0,0],[3,4],[6,8]], "metric": "taxicab" }"#;
        let file: SpaceFile = serde_json::from_str(bad).unwrap();
        assert!(matches!(file.into_space(), Err(SpaceFileError::UnknownMetric(_))));
    }

    #[test]
    fn filling_file_keeps_adjacency() {
        let s = generate_space(SpaceKind::Line, 6, 0).unwrap();
        let g = build_filling(&s, &FillingParams::new(2.0, 4.0)).unwrap();
        let file = FillingFile::from_graph(&g);
        let text = serde_json::to_string(&file).unwrap();
        let back: FillingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.adjacency().unwrap(), g.adjacency());
        let m = back.distance_matrix().unwrap();
        use crate::gromov::DistanceOracle;
        assert_eq!(m.distance(0, g.vertex_count() - 1), g.dist_ids(0, g.vertex_count() - 1) as f64);
    }

    #[test]
    fn dot_labels() {
        let s = generate_space(SpaceKind::Line, 3, 0).unwrap();
        let g = build_filling(&s, &FillingParams::new(2.0, 4.0)).unwrap();
        let dot = to_dot(&g);
        assert!(dot.starts_with("graph filling {"));
        assert!(dot.contains(&format!("label=\"0@{}\"", g.n_min())));
        assert_eq!(dot.matches(" -- ").count(), g.edges().len());
    }
}
