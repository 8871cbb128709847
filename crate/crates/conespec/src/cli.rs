//! The `conespec` command line:
//! `conespec <analyze|embed|cones|sweep> --config FILE [--preset NAME] ...`
//!
//! Exit codes: 0 success, 1 error, 2 indeterminate verdict or detection
//! failure. All primary outputs are deterministic given the configuration
//! and seed. `CONESPEC_THREADS` caps the worker pool.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::continuum;
use crate::domain::Domain;
use crate::embedding::{self, DetectionOutcome, EmbeddedCloud};
use crate::error::{Error, Result};
use crate::graph::{self, GraphLaplacian, PointCloud};
use crate::kernel::{KernelProfile, KernelShape};
use crate::mixture::{ComponentKind, DumbbellAxis, MixtureModel};
use crate::presets::{self, BuiltModel, DumbbellPartition};
use crate::quad::QuadratureSpec;
use crate::report::{self, ReportParams, Verdict};

#[derive(Parser, Debug)]
#[command(
    name = "conespec",
    version,
    about = "spectral embeddings of mixture models and their cone-structure certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compute the separation report for a declared mixture model.
    Analyze(AnalyzeArgs),
    /// Sample or load a point cloud, build the graph Laplacian, and embed.
    Embed(EmbedArgs),
    /// Detect orthogonal cone structures in an embedding.
    Cones(ConesArgs),
    /// Parameter sweeps producing a long-form CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Mixture model JSON config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: gaussian-pair | dumbbell | uniform-circle | two-circles | orthogonal-clusters.
    #[arg(long)]
    preset: Option<String>,
    /// Offset of the gaussian-pair preset.
    #[arg(long)]
    gamma: Option<f64>,
    /// Dumbbell neck half-height.
    #[arg(long)]
    vartheta: Option<f64>,
    /// Dumbbell ramp width.
    #[arg(long)]
    psi_eps: Option<f64>,
    /// Dumbbell partition: good | bad.
    #[arg(long)]
    partition: Option<String>,
    /// Quadrature nodes per axis.
    #[arg(long)]
    quad_nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample count the sampled-data terms refer to.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eps_multiplier: f64,
    #[arg(long)]
    resolution: Option<usize>,
    /// Manifold constant for the sampled-data bound.
    #[arg(long, default_value_t = 1.0)]
    c_manifold: f64,
    /// Grid-search the auxiliary angle s instead of the midpoint rule.
    #[arg(long, default_value_t = false)]
    refine_s: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Point cloud CSV (one point per row) instead of sampling.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eps_multiplier: f64,
    /// Kernel profile: tent | indicator.
    #[arg(long, default_value = "tent")]
    kernel: String,
    /// Use the γ-renormalized Laplacian family instead of the kernelized one.
    #[arg(long)]
    laplacian_gamma: Option<f64>,
    /// Embedding dimension (number of eigenvectors).
    #[arg(long = "N", default_value_t = 2)]
    n_coords: usize,
    /// Declared intrinsic dimension for CSV clouds.
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    /// Also export the Laplacian in Matrix Market format.
    #[arg(long, default_value_t = false)]
    export_matrix: bool,
    /// Dump the eigensolver residual history to residual_history.csv.
    #[arg(long, default_value_t = false)]
    trace_eigen: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConesArgs {
    #[command(flatten)]
    embed: EmbedArgs,
    /// Existing embedding CSV; otherwise the embedding is produced inline.
    #[arg(long)]
    embedding: Option<PathBuf>,
    /// Comma-separated σ grid (radians, inside (0, π/4)).
    #[arg(long)]
    sigma_grid: Option<String>,
    /// Comma-separated r grid.
    #[arg(long)]
    r_grid: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sweep kind: gaussian-gamma | dumbbell-vartheta | epsilon | n.
    #[arg(long)]
    kind: String,
    /// Comma-separated cell values.
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eps_multiplier: f64,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Entry point for the binary.
pub fn main() -> i32 {
    init_thread_pool();
    run(std::env::args())
}

/// Parses and runs; suitable for in-process tests.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Cmd::Analyze(args) => cmd_analyze(&args),
        Cmd::Embed(args) => cmd_embed(&args),
        Cmd::Cones(args) => cmd_cones(&args),
        Cmd::Sweep(args) => cmd_sweep(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("CONESPEC_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
        }
    }
}

// ---------------------------------------------------------------- configs

#[derive(Debug, Deserialize)]
struct ModelConfig {
    domain: Domain,
    components: Vec<ComponentConfig>,
    weights: Vec<f64>,
    #[serde(default)]
    intrinsic_dim: Option<usize>,
    #[serde(default)]
    resolution: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ComponentConfig {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    UniformRect {
        rect: crate::domain::Rect,
    },
    CircleUniform,
    DumbbellLeft {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    DumbbellRight {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    DumbbellProfileLeft {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    DumbbellProfileRight {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    /// Piecewise-linear density from a CSV of (x, density) rows.
    Table {
        path: String,
    },
}

fn load_table_csv(path: &Path) -> Result<ComponentKind> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "table rows need (x, density) columns in {}",
                path.display()
            )));
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidConfig(format!("non-numeric value {s:?} in {}", path.display()))
            })
        };
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    Ok(ComponentKind::Table { xs, ys })
}

fn load_model_config(path: &Path, quad: &QuadratureSpec) -> Result<BuiltModel> {
    if !path.exists() {
        return Err(Error::InvalidConfig(format!(
            "config file {} does not exist",
            path.display()
        )));
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: ModelConfig = serde_json::from_str(&text)?;
    // revalidate the domain through its constructors
    let domain = match cfg.domain {
        Domain::Interval { a, b } => Domain::interval(a, b)?,
        Domain::Rectangles { rects } => Domain::rectangles(rects)?,
        Domain::Circle { radius } => Domain::circle(radius)?,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let kinds = cfg
        .components
        .into_iter()
        .map(|c| {
            Ok(match c {
                ComponentConfig::Gaussian { mean, sd } => ComponentKind::Gaussian { mean, sd },
                ComponentConfig::Uniform { a, b } => ComponentKind::Uniform { a, b },
                ComponentConfig::UniformRect { rect } => ComponentKind::UniformRect { rect },
                ComponentConfig::CircleUniform => ComponentKind::CircleUniform,
                ComponentConfig::DumbbellLeft {
                    vartheta,
                    eps,
                    axis,
                } => ComponentKind::DumbbellLeft {
                    vartheta,
                    eps,
                    axis,
                },
                ComponentConfig::DumbbellRight {
                    vartheta,
                    eps,
                    axis,
                } => ComponentKind::DumbbellRight {
                    vartheta,
                    eps,
                    axis,
                },
                ComponentConfig::DumbbellProfileLeft {
                    vartheta,
                    eps,
                    axis,
                } => ComponentKind::DumbbellProfileLeft {
                    vartheta,
                    eps,
                    axis,
                },
                ComponentConfig::DumbbellProfileRight {
                    vartheta,
                    eps,
                    axis,
                } => ComponentKind::DumbbellProfileRight {
                    vartheta,
                    eps,
                    axis,
                },
                ComponentConfig::Table { path: table_path } => {
                    load_table_csv(&base.join(table_path))?
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let intrinsic_dim = cfg.intrinsic_dim.unwrap_or(domain.intrinsic_dim());
    let default_resolution = cfg.resolution.unwrap_or(if domain.intrinsic_dim() == 2 {
        256
    } else {
        2048
    });
    Ok(BuiltModel {
        model: MixtureModel::new(domain, kinds, cfg.weights, quad)?,
        intrinsic_dim,
        default_resolution,
    })
}

fn quad_for(model_args: &ModelArgs) -> Result<QuadratureSpec> {
    QuadratureSpec::simpson(model_args.quad_nodes.unwrap_or((1 << 14) + 1))
}

fn load_model(args: &ModelArgs, quad: &QuadratureSpec) -> Result<BuiltModel> {
    if let Some(path) = &args.config {
        return load_model_config(path, quad);
    }
    let preset = args
        .preset
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("either --config or --preset is required".into()))?;
    match preset {
        "gaussian-pair" => presets::gaussian_pair(args.gamma.unwrap_or(6.0), quad),
        "dumbbell" => {
            let partition = match args.partition.as_deref().unwrap_or("good") {
                "good" => DumbbellPartition::Good,
                "bad" => DumbbellPartition::Bad,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown partition {other:?}, expected good|bad"
                    )))
                }
            };
            presets::dumbbell(
                args.vartheta.unwrap_or(0.01),
                args.psi_eps.unwrap_or(0.1),
                partition,
                quad,
            )
        }
        "uniform-circle" => presets::uniform_circle(quad),
        other => Err(Error::InvalidConfig(format!(
            "preset {other:?} is not a mixture model preset (expected gaussian-pair | dumbbell | uniform-circle)"
        ))),
    }
}

fn parse_kernel(name: &str, dim: usize) -> Result<KernelProfile> {
    match name {
        "tent" => KernelProfile::new(KernelShape::Tent, dim),
        "indicator" => KernelProfile::new(KernelShape::Indicator, dim),
        other => Err(Error::InvalidConfig(format!(
            "unknown kernel {other:?}, expected tent|indicator"
        ))),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"))
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------- analyze

fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32> {
    let quad = quad_for(&args.model)?;
    let built = load_model(&args.model, &quad)?;
    let resolution = args.resolution.unwrap_or(built.default_resolution);
    let epsilon = args.epsilon.unwrap_or_else(|| {
        graph::default_epsilon(args.n, built.intrinsic_dim, args.eps_multiplier)
    });
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let mut params = ReportParams::new(resolution, args.n, built.intrinsic_dim, epsilon);
    params.c_manifold = args.c_manifold;
    params.refine_s = args.refine_s;
    let report = report::assemble_report(&built.model, &quad, &params)?;
    ensure_out_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    write_text(&args.out.join("report.txt"), &report.to_text())?;
    println!("{}", report.to_text());
    Ok(match report.verdict {
        Verdict::Indeterminate => 2,
        _ => 0,
    })
}

// ---------------------------------------------------------------- embed

struct EmbedOutput {
    cloud: EmbeddedCloud,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    laplacian: GraphLaplacian,
    epsilon: f64,
    intrinsic_dim: usize,
}

fn embed_pipeline(args: &EmbedArgs) -> Result<EmbedOutput> {
    let quad = quad_for(&args.model)?;
    // point source: CSV, a cloud preset, or a sampled model
    let (points, intrinsic_dim) = if let Some(path) = &args.points {
        let cloud = PointCloud::from_csv_path(path)?;
        let dim = args.intrinsic_dim.unwrap_or(cloud.dim);
        (cloud, dim)
    } else if args.model.preset.as_deref() == Some("two-circles") {
        (presets::two_circles_cloud(args.n, args.seed), 1)
    } else {
        let built = load_model(&args.model, &quad)?;
        let pts = built.model.sample(args.n, args.seed)?;
        let ambient = built.model.to_ambient_cloud(&pts);
        (
            PointCloud::new(ambient, built.model.domain.ambient_dim()),
            built.intrinsic_dim,
        )
    };
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidConfig("need at least two points".into()));
    }
    let epsilon = args
        .epsilon
        .unwrap_or_else(|| graph::default_epsilon(n, intrinsic_dim, args.eps_multiplier));
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let kernel = parse_kernel(&args.kernel, intrinsic_dim)?;
    let laplacian = match args.laplacian_gamma {
        Some(g) => graph::gamma_laplacian(&points, epsilon, &kernel, g)?,
        None => graph::kernelized_weights(&points, epsilon, &kernel)?,
    };
    let (cloud, eigenvalues, residuals) =
        match embedding::discrete_embedding_with_spectrum(&laplacian, args.n_coords, args.seed) {
            Ok(v) => v,
            Err(Error::DisconnectedGraph { components }) => {
                let connecting = graph::connecting_epsilon(&points.points);
                eprintln!(
                    "graph is disconnected at epsilon {epsilon}: {components} components; \
                     smallest connecting epsilon is about {connecting:.6}"
                );
                return Err(Error::DisconnectedGraph { components });
            }
            Err(e) => return Err(e),
        };
    Ok(EmbedOutput {
        cloud,
        eigenvalues,
        residuals,
        laplacian,
        epsilon,
        intrinsic_dim,
    })
}

#[derive(Serialize)]
struct EigenvaluesJson<'a> {
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
    n: usize,
    n_coords: usize,
    epsilon: f64,
    intrinsic_dim: usize,
    kernel: &'a KernelProfile,
    variant: &'a graph::LaplacianVariant,
    seed: u64,
}

fn cmd_embed(args: &EmbedArgs) -> Result<i32> {
    let out = embed_pipeline(args)?;
    ensure_out_dir(&args.out)?;
    let mut csv_buf = Vec::new();
    out.cloud.write_csv(&mut csv_buf)?;
    std::fs::write(args.out.join("embedding.csv"), csv_buf)
        .map_err(|e| Error::io("embedding.csv", e))?;
    write_json(
        &args.out.join("eigenvalues.json"),
        &EigenvaluesJson {
            eigenvalues: &out.eigenvalues,
            residuals: &out.residuals,
            n: out.laplacian.n,
            n_coords: args.n_coords,
            epsilon: out.epsilon,
            intrinsic_dim: out.intrinsic_dim,
            kernel: &out.laplacian.kernel,
            variant: &out.laplacian.variant,
            seed: args.seed,
        },
    )?;
    if args.export_matrix {
        let file = std::fs::File::create(args.out.join("laplacian.mtx"))
            .map_err(|e| Error::io("laplacian.mtx", e))?;
        out.laplacian.write_matrix_market(file)?;
    }
    if args.trace_eigen {
        let req = crate::eigen::EigenRequest::new(args.n_coords).with_seed(args.seed);
        let res = crate::eigen::smallest_eigenpairs(&out.laplacian.laplacian, None, &req)?;
        let file = std::fs::File::create(args.out.join("residual_history.csv"))
            .map_err(|e| Error::io("residual_history.csv", e))?;
        res.write_residual_history_csv(file)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------- cones

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum ConesJson {
    Detected {
        sigma: f64,
        r: f64,
        delta: f64,
        basis: Vec<Vec<f64>>,
        per_cone_mass: Vec<f64>,
        grid: Vec<embedding::DetectionCell>,
    },
    Failed {
        reason: String,
        grid: Vec<embedding::DetectionCell>,
    },
}

fn parse_grid(text: Option<&str>, default: &[f64]) -> Result<Vec<f64>> {
    match text {
        None => Ok(default.to_vec()),
        Some(t) => t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("non-numeric grid value {s:?}")))
            })
            .collect(),
    }
}

fn cmd_cones(args: &ConesArgs) -> Result<i32> {
    let cloud = if let Some(path) = &args.embedding {
        EmbeddedCloud::from_csv_path(path)?
    } else if args.embed.model.preset.as_deref() == Some("orthogonal-clusters") {
        presets::orthogonal_clusters_cloud(
            args.embed.n,
            args.embed.n_coords.max(2),
            args.embed.seed,
        )
    } else {
        embed_pipeline(&args.embed)?.cloud
    };
    let n_cones = args.embed.n_coords;
    if n_cones > cloud.dim() {
        return Err(Error::InvalidConeParameters(format!(
            "{n_cones} cones requested in embedding dimension {}",
            cloud.dim()
        )));
    }
    let sigmas = parse_grid(
        args.sigma_grid.as_deref(),
        &[
            std::f64::consts::PI / 16.0,
            std::f64::consts::PI / 8.0,
            3.0 * std::f64::consts::PI / 16.0,
            0.1,
        ],
    )?;
    let rs = parse_grid(args.r_grid.as_deref(), &[0.25, 0.5, 0.75, 1.0])?;
    for s in &sigmas {
        if !(*s > 0.0 && *s < std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidConfig(format!("sigma {s} outside (0, pi/4)")));
        }
    }
    let grid = embedding::detect_cone_structure(&cloud, n_cones, &sigmas, &rs)?;

    ensure_out_dir(&args.embed.out)?;
    // pareto table
    let mut pareto = String::from("sigma,r,delta,status\n");
    for cell in &grid {
        match &cell.outcome {
            DetectionOutcome::Detected(c) => {
                pareto.push_str(&format!("{},{},{},detected\n", cell.sigma, cell.r, c.delta));
            }
            DetectionOutcome::Failed { .. } => {
                pareto.push_str(&format!("{},{},,failed\n", cell.sigma, cell.r));
            }
        }
    }
    write_text(&args.embed.out.join("pareto.csv"), &pareto)?;

    let best = grid
        .iter()
        .filter_map(|cell| match &cell.outcome {
            DetectionOutcome::Detected(c) => Some((cell, c)),
            _ => None,
        })
        .min_by(|a, b| {
            (a.1.delta, a.0.sigma, a.0.r)
                .partial_cmp(&(b.1.delta, b.0.sigma, b.0.r))
                .unwrap()
        });
    match best {
        Some((cell, cones)) => {
            write_json(
                &args.embed.out.join("cones.json"),
                &ConesJson::Detected {
                    sigma: cell.sigma,
                    r: cell.r,
                    delta: cones.delta,
                    basis: cones.basis.clone(),
                    per_cone_mass: cones.per_cone_mass.clone(),
                    grid: grid.clone(),
                },
            )?;
            println!(
                "detected cones at sigma={:.4} r={:.4} with delta={:.6}",
                cell.sigma, cell.r, cones.delta
            );
            Ok(0)
        }
        None => {
            let reason = grid
                .iter()
                .map(|cell| match &cell.outcome {
                    DetectionOutcome::Failed { reason } => reason.clone(),
                    _ => String::new(),
                })
                .find(|r| !r.is_empty())
                .unwrap_or_else(|| "no grid cell produced a detection".into());
            write_json(
                &args.embed.out.join("cones.json"),
                &ConesJson::Failed {
                    reason: reason.clone(),
                    grid,
                },
            )?;
            eprintln!("detection failed: {reason}");
            Ok(2)
        }
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    key: String,
    kind: String,
    value: f64,
    n: usize,
    seed: u64,
    epsilon: f64,
    s: Option<f64>,
    c: Option<f64>,
    theta: Option<f64>,
    tau: Option<f64>,
    delta_star: Option<f64>,
    phi: Option<f64>,
    achieved_delta: Option<f64>,
    error: String,
}

fn sweep_cell(args: &SweepArgs, kind: &str, value: f64) -> SweepRow {
    let key = format!("{kind}={value};n={};seed={}", args.n, args.seed);
    let mut row = SweepRow {
        key,
        kind: kind.to_string(),
        value,
        n: args.n,
        seed: args.seed,
        epsilon: 0.0,
        s: None,
        c: None,
        theta: None,
        tau: None,
        delta_star: None,
        phi: None,
        achieved_delta: None,
        error: String::new(),
    };
    let result = (|| -> Result<()> {
        let quad = quad_for(&args.model)?;
        let (built, epsilon) = match kind {
            "gaussian-gamma" => {
                let b = presets::gaussian_pair(value, &quad)?;
                let eps = args
                    .epsilon
                    .unwrap_or_else(|| graph::default_epsilon(args.n, 1, args.eps_multiplier));
                (b, eps)
            }
            "dumbbell-vartheta" => {
                let b = presets::dumbbell(
                    value,
                    args.model.psi_eps.unwrap_or(0.1),
                    DumbbellPartition::Good,
                    &quad,
                )?;
                let eps = args
                    .epsilon
                    .unwrap_or_else(|| graph::default_epsilon(args.n, 2, args.eps_multiplier));
                (b, eps)
            }
            "epsilon" => {
                let b = load_model(&args.model, &quad)
                    .or_else(|_| presets::gaussian_pair(6.0, &quad))?;
                (b, value)
            }
            "n" => {
                let b = load_model(&args.model, &quad)
                    .or_else(|_| presets::gaussian_pair(6.0, &quad))?;
                let m = b.intrinsic_dim;
                (
                    b,
                    graph::default_epsilon(value as usize, m, args.eps_multiplier),
                )
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown sweep kind {other:?}"
                )))
            }
        };
        let n_samples = if kind == "n" { value as usize } else { args.n };
        row.epsilon = epsilon;
        let resolution = args.resolution.unwrap_or(built.default_resolution.min(256));
        let overlap = built.model.overlap_parameter(&quad);
        let coupling = built.model.coupling_parameter(&quad);
        row.s = Some(overlap.value);
        row.c = Some(coupling.value);
        let indiv = continuum::indivisibility_parameter(&built.model, resolution)?;
        row.theta = Some(indiv.value);
        let tau = report::tau(
            overlap.value,
            coupling.value,
            indiv.value,
            built.model.n_components(),
        );
        row.tau = tau.value;
        let sigma = std::f64::consts::FRAC_PI_8;
        row.delta_star = Some(
            report::delta_star(
                overlap.value,
                sigma,
                &built.model.weights,
                built.model.n_components(),
            )
            .value,
        );
        row.phi = report::phi(
            overlap.value,
            coupling.value,
            indiv.value,
            built.model.n_components(),
            epsilon,
            n_samples,
            built.intrinsic_dim,
            1.0,
        )
        .value;

        // achieved delta through the sampled pipeline
        let pts = built.model.sample(n_samples, args.seed)?;
        let ambient = built.model.to_ambient_cloud(&pts);
        let cloud = PointCloud::new(ambient, built.model.domain.ambient_dim());
        let kernel = KernelProfile::tent(built.intrinsic_dim)?;
        let lap = graph::kernelized_weights(&cloud, epsilon, &kernel)?;
        let emb = embedding::discrete_embedding(&lap, built.model.n_components(), args.seed)?;
        match embedding::detect_cone_structure_at(&emb, built.model.n_components(), sigma, 0.5) {
            DetectionOutcome::Detected(cones) => row.achieved_delta = Some(cones.delta),
            DetectionOutcome::Failed { reason } => {
                row.error = format!("detection failed: {reason}");
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = e.to_string();
    }
    row
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let values: Vec<f64> = args
        .values
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("non-numeric sweep value {s:?}")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() || values.len() > 10_000 {
        return Err(Error::InvalidConfig(format!(
            "sweep needs between 1 and 10000 cells, got {}",
            values.len()
        )));
    }
    ensure_out_dir(&args.out)?;
    let path = args.out.join("sweep.csv");
    // resume: skip keys already present
    let mut done: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut existing = String::new();
    if path.exists() {
        existing =
            std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        for line in existing.lines().skip(1) {
            if let Some(key) = line.split(',').next() {
                done.insert(key.to_string());
            }
        }
    }
    let pending: Vec<f64> = values
        .iter()
        .cloned()
        .filter(|v| {
            let key = format!("{}={v};n={};seed={}", args.kind, args.n, args.seed);
            !done.contains(&key)
        })
        .collect();

    use rayon::prelude::*;
    let rows: Vec<SweepRow> = pending
        .par_iter()
        .map(|v| sweep_cell(args, &args.kind, *v))
        .collect();

    let mut out = String::new();
    if existing.is_empty() {
        out.push_str(
            "key,kind,value,n,seed,epsilon,S,C,Theta,tau,delta_star,phi,achieved_delta,error\n",
        );
    } else {
        out.push_str(&existing);
        if !existing.ends_with('\n') {
            out.push('\n');
        }
    }
    let fmt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.key,
            row.kind,
            row.value,
            row.n,
            row.seed,
            row.epsilon,
            fmt(&row.s),
            fmt(&row.c),
            fmt(&row.theta),
            fmt(&row.tau),
            fmt(&row.delta_star),
            fmt(&row.phi),
            fmt(&row.achieved_delta),
            row.error.replace(',', ";"),
        ));
    }
    write_text(&path, &out)?;
    println!("sweep: {} new rows -> {}", rows.len(), path.display());
    Ok(0)
}
