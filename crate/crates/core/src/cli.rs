//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an input fails validation or a
//! computation rejects it, 2 when a file cannot be read, parsed or written.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{
    boundary_map, phi_closeness_fit, qi_envelope, roundtrip, run_pipeline, sigma_displacement_fit,
    sigma_similarity_fit, strong_qi_check, PairScope, PipelineConfig, QIEnvelope,
};
use crate::analysis::{height_formula_error, predicted_slopes};
use crate::filling::{build_filling, FillingParams, DEFAULT_DEPTH_MARGIN};
use crate::gromov::{busemann_deviation_fit, busemann_values, hyperbolicity_delta, visual_compare_fit, DeltaMode};
use crate::io::{
    load_map, load_space, save_space, to_dot, write_json, DeltaReportFile, ExtensionFile, FillingFile, IoError,
};
use crate::metric::{generate_space, snowflake, SpaceKind};
use crate::qsmap::PointMap;

#[derive(Debug, Parser)]
#[command(name = "hypfill", version, about = "Hyperbolic fillings of finite metric spaces")]
struct Cli {
    /// Worker threads for parallel scans.
    #[arg(long, global = true, env = "HYPFILL_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a corpus space.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raise every distance of a space to the power `eps`.
    Snowflake {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a filling graph.
    Fill {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 4.0)]
        tau: f64,
        #[arg(long, requires = "n_max")]
        n_min: Option<i32>,
        #[arg(long, requires = "n_min")]
        n_max: Option<i32>,
        #[arg(long, default_value_t = DEFAULT_DEPTH_MARGIN)]
        margin: i32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a Graphviz rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Four-point hyperbolicity of a stored filling.
    Delta {
        #[arg(long)]
        filling: PathBuf,
        /// Base space of the filling; enables the Busemann fits.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
        mode: ModeArg,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extend a boundary map to the fillings and snap it to vertices.
    Extend {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Exponent of the input; adds the envelope at the predicted slopes.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Envelope, strong quasi-isometry and similarity fits of an extension.
    Analyze {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read the boundary map off an extension.
    Boundary {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full extension and recovery round trip.
    Roundtrip {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Line,
    Circle,
    Cantor,
    Random,
}

impl From<KindArg> for SpaceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Line => SpaceKind::Line,
            KindArg::Circle => SpaceKind::Circle,
            KindArg::Cantor => SpaceKind::Cantor,
            KindArg::Random => SpaceKind::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
}

/// A map file, or the identity from `--space` into its snowflake or rescaling.
#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long, conflicts_with = "space")]
    map: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, requires = "space", conflicts_with = "scale")]
    eps: Option<f64>,
    #[arg(long, requires = "space")]
    scale: Option<f64>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha_z: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha_w: f64,
    #[arg(long, default_value_t = 4.0)]
    tau: f64,
    /// Target-side τ; defaults to `--tau`.
    #[arg(long)]
    tau_w: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_MARGIN)]
    depth: i32,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            alpha_z: self.alpha_z,
            alpha_w: self.alpha_w,
            tau_z: self.tau,
            tau_w: self.tau_w.unwrap_or(self.tau),
            depth: self.depth,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Domain(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(jobs) = cli.jobs {
        // a pool installed by an earlier call in the same process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Domain(m) | CliError::Io(m) => eprintln!("hypfill: {m}"),
            }
            e.code()
        }
    }
}

fn emit(out: Option<&Path>, value: &Value) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(write_json(path, value)?),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("json value"));
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn load_point_map(args: &MapArgs) -> Result<PointMap, CliError> {
    if let Some(path) = &args.map {
        return Ok(load_map(path)?);
    }
    let Some(space_path) = &args.space else {
        return Err(CliError::Domain("either --map or --space is required".into()));
    };
    let source = Arc::new(load_space(space_path)?);
    let target = match (args.eps, args.scale) {
        (Some(eps), _) => snowflake(&source, eps).map_err(domain)?,
        (None, Some(c)) => source.rescaled(c).map_err(domain)?,
        (None, None) => (*source).clone(),
    };
    PointMap::identity(source, Arc::new(target)).map_err(domain)
}

fn envelope_json(env: &QIEnvelope) -> Value {
    json!({
        "L1": env.l1,
        "L2": env.l2,
        "k": finite_or_null(env.k),
        "cobound": env.cobound,
        "constant": finite_or_null(env.constant()),
        "witness": env.witness,
    })
}

fn environment_json(cfg: &PipelineConfig, band_z: (i32, i32), band_w: (i32, i32), seed: u64) -> Value {
    json!({
        "alpha_Z": cfg.alpha_z,
        "alpha_W": cfg.alpha_w,
        "tau_Z": cfg.tau_z,
        "tau_W": cfg.tau_w,
        "depth_margin": cfg.depth,
        "band_Z": [band_z.0, band_z.1],
        "band_W": [band_w.0, band_w.1],
        "seed": seed,
    })
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen { kind, n, seed, out } => {
            let space = generate_space(kind.into(), n, seed).map_err(domain)?;
            match out {
                Some(path) => Ok(save_space(&path, &space)?),
                None => emit(None, &to_value(&crate::io::SpaceFile::from_space(&space))),
            }
        }
        Command::Snowflake { space, eps, out } => {
            let s = snowflake(&load_space(&space)?, eps).map_err(domain)?;
            match out {
                Some(path) => Ok(save_space(&path, &s)?),
                None => emit(None, &to_value(&crate::io::SpaceFile::from_space(&s))),
            }
        }
        Command::Fill { space, alpha, tau, n_min, n_max, margin, out, dot } => {
            let base = load_space(&space)?;
            let mut params = FillingParams::new(alpha, tau).with_margin(margin);
            if let (Some(lo), Some(hi)) = (n_min, n_max) {
                params = params.with_heights(lo, hi);
            }
            let g = build_filling(&base, &params).map_err(domain)?;
            let inv = g.check_invariants();
            eprintln!(
                "vertices {} edges {} band [{}, {}] covering {} separation {} saturation {} connected {} height-lipschitz {}",
                g.vertex_count(),
                g.edges().len(),
                g.n_min(),
                g.n_max(),
                inv.covering,
                inv.separation,
                inv.saturation,
                inv.connected,
                inv.height_lipschitz
            );
            if let Some(path) = dot {
                std::fs::write(&path, to_dot(&g)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            emit(out.as_deref(), &to_value(&FillingFile::from_graph(&g)))
        }
        Command::Delta { filling, space, mode, samples, seed, out } => {
            let file: FillingFile = crate::io::read_json(&filling)?;
            let matrix = file.distance_matrix().map_err(|m| CliError::Io(format!("{}: {m}", filling.display())))?;
            let mode = match mode {
                ModeArg::Exhaustive => DeltaMode::Exhaustive,
                ModeArg::Sampled => DeltaMode::Sampled,
            };
            let report = hyperbolicity_delta(&matrix, mode, samples, seed).map_err(domain)?;
            let (mut nu_fit, mut compare_c_fit) = (None, None);
            if let Some(space_path) = space {
                let base = load_space(&space_path)?;
                let params = FillingParams::new(file.alpha, file.tau).with_heights(file.n_min, file.n_max);
                let g = build_filling(&base, &params).map_err(domain)?;
                if FillingFile::from_graph(&g) != file {
                    return Err(CliError::Domain("filling file does not match the filling of --space".into()));
                }
                let b = busemann_values(&g, 0).map_err(domain)?;
                nu_fit = Some(busemann_deviation_fit(&g, &b));
                compare_c_fit = Some(visual_compare_fit(&g, &b));
            }
            let file = DeltaReportFile {
                delta: report.delta,
                mode: report.mode.name().to_string(),
                witness: report.witness.to_vec(),
                nu_fit,
                compare_c_fit,
            };
            emit(out.as_deref(), &to_value(&file))
        }
        Command::Extend { map, pipeline, theta, out } => {
            let map = load_point_map(&map)?;
            let cfg = pipeline.config();
            let pipe = run_pipeline(&map, &cfg).map_err(domain)?;
            let ext = &pipe.extension;
            let mut constants = std::collections::BTreeMap::new();
            constants.insert("snap_deviation".to_string(), ext.snap_deviation.unwrap_or(f64::NAN));
            constants
                .insert("height_formula_error".to_string(), height_formula_error(ext, &pipe.xz, &pipe.xw, &pipe.phis));
            if let Some(theta) = theta {
                let (l1, l2) = predicted_slopes(theta, cfg.alpha_z, cfg.alpha_w).map_err(domain)?;
                let env = qi_envelope(pipe.vertex_map(), &pipe.xz, &pipe.xw, l1, l2).map_err(domain)?;
                constants.insert("L1".into(), l1);
                constants.insert("L2".into(), l2);
                constants.insert("k".into(), env.k);
                constants.insert("cobound".into(), env.cobound);
            }
            let file = ExtensionFile {
                vertex_map: pipe.vertex_map().iter().enumerate().map(|(s, &d)| [s, d]).collect(),
                geodesic_map: ext.geodesic_map.iter().enumerate().map(|(s, p)| (s, p.anchor, p.height)).collect(),
                constants,
            };
            emit(out.as_deref(), &to_value(&file))
        }
        Command::Analyze { map, pipeline, theta, samples, seed, out } => {
            let map = load_point_map(&map)?;
            let cfg = pipeline.config();
            let pipe = run_pipeline(&map, &cfg).map_err(domain)?;
            let g = pipe.vertex_map();
            let (l1, l2) = predicted_slopes(theta, cfg.alpha_z, cfg.alpha_w).map_err(domain)?;
            let env = qi_envelope(g, &pipe.xz, &pipe.xw, l1, l2).map_err(domain)?;
            let strong = strong_qi_check(g, &pipe.xz, &pipe.xw, l1, l2, samples, seed).map_err(domain)?;
            let report = json!({
                "envelope": envelope_json(&env),
                "strong_qi": {
                    "D_fit": strong.d_fit,
                    "checked": strong.checked,
                    "witness": strong.witness,
                },
                "sigma_similarity_C_fit": sigma_similarity_fit(&pipe.xz, PairScope::Interior).map_err(domain)?,
                "sigma_displacement_fit": sigma_displacement_fit(&pipe.xz).map_err(domain)?,
                "phi_closeness_fit": phi_closeness_fit(map.source(), &pipe.phis, 64),
                "environment": environment_json(
                    &cfg,
                    (pipe.xz.n_min(), pipe.xz.n_max()),
                    (pipe.xw.n_min(), pipe.xw.n_max()),
                    seed,
                ),
            });
            emit(out.as_deref(), &report)
        }
        Command::Boundary { map, pipeline, out } => {
            let map = load_point_map(&map)?;
            let pipe = run_pipeline(&map, &pipeline.config()).map_err(domain)?;
            let b = boundary_map(pipe.vertex_map(), &pipe.xz, &pipe.xw).map_err(domain)?;
            let report = json!({
                "forward": b.forward,
                "mu": b.mu,
                "mu_max": b.mu_max(),
                "bijective": b.bijective,
                "omega_height": b.omega_height,
                "matches_input": b.forward == map.forward(),
            });
            emit(out.as_deref(), &report)
        }
        Command::Roundtrip { map, pipeline, theta, tol, seed, out } => {
            let map = load_point_map(&map)?;
            let cfg = pipeline.config();
            let r = roundtrip(&map, theta, &cfg, tol).map_err(domain)?;
            let report = json!({
                "theta": r.theta,
                "lambda": r.lambda,
                "slopes": [r.slopes.0, r.slopes.1],
                "envelope": envelope_json(&r.envelope),
                "snap_deviation": finite_or_null(r.snap_deviation),
                "height_formula_error": r.height_formula_error,
                "boundary": {
                    "forward": r.boundary.forward,
                    "mu": r.boundary.mu,
                    "bijective": r.boundary.bijective,
                    "omega_height": r.boundary.omega_height,
                },
                "boundary_matches": r.boundary_matches,
                "exponents": [r.exponents.0, r.exponents.1],
                "lambda_fit": r.lambda_fit,
                "recovered_passes": r.recovered_passes,
                "theta_fit": r.theta_fit,
                "passed": r.passed(),
                "environment": environment_json(&cfg, r.band_z, r.band_w, seed),
            });
            emit(out.as_deref(), &report)
        }
    }
}
