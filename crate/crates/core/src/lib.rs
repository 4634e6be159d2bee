//! Hyperbolic fillings of finite metric spaces.
//!
//! The crate builds truncated hyperbolic fillings over finite metric spaces,
//! extends power quasi-symmetric maps between the bases to rough
//! quasi-isometric maps between the fillings (through the hyperbolic cone),
//! and extracts boundary maps back out of vertex maps. Every quantitative
//! relation between the exponents of the boundary map and the slopes of the
//! extension is measured by the [`analysis`] module.
//!
//! Module map:
//! - [`metric`]: finite metric spaces, generators, snowflaking, separated nets
//! - [`filling`]: the filling graph, anchored rays, points on rays
//! - [`gromov`]: Gromov products, four-point δ, Busemann surrogates
//! - [`cone`]: the hyperbolic cone metric
//! - [`qsmap`]: power quasi-symmetric maps and their fitted controls
//! - [`extension`]: Φ tables, the cone map, σ and its rough inverse, snapping
//! - [`analysis`]: envelopes, boundary extraction, round trips
//! - [`io`]: JSON file formats and DOT export
//! - [`cli`]: the `hypfill` command line

// NaN must fail every parameter check, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod cone;
pub mod extension;
pub mod filling;
pub mod gromov;
pub mod io;
pub mod metric;
pub mod qsmap;

pub use cone::ConePoint;
pub use filling::{FillingGraph, FillingParams, GeodesicPoint, Vertex};
pub use metric::FiniteMetricSpace;
pub use qsmap::{PointMap, PowerControl};
