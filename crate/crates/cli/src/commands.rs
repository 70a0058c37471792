use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use curvprof::curvature::{
    build_profile, rho_general, ClusterSampling, CurvatureProfile, ProfileConfig, RhoMethod,
    SideBin,
};
use curvprof::embedding::{geodesic_metric, load_external_embedding, MdsDecomposition};
use curvprof::generators::{self, DlaParams};
use curvprof::metric::{gromov_products, lambda_measure};
use curvprof::report;
use curvprof::transport::{estimate_dimension, to_distribution, wasserstein1_plan, GridSpec};
use curvprof::{knn_graph, shortest_path_matrix, DistanceMatrix, PointCloud};
use serde::Serialize;

use crate::input::{load, parse_dims, Format, GraphOpts, Loaded};

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplingOpts {
    /// Fraction of candidate vertices sampled at each scale.
    #[arg(short, long = "sample-fraction", default_value_t = 0.1)]
    pub m: f64,
    /// Seed for every random choice of the run.
    #[arg(long, env = "CURVPROF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Side-length bin width for weighted metrics (default: diameter / 50).
    #[arg(long, conflicts_with = "side_bins")]
    pub side_bin_width: Option<f64>,
    /// Number of side-length bins for weighted metrics.
    #[arg(long)]
    pub side_bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = RhoAlgo::Minmax)]
    pub rho_method: RhoAlgo,
    /// Only form triples inside a sample drawn from this many clusters.
    #[arg(long, requires = "per_cluster")]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub per_cluster: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoAlgo {
    Minmax,
    BallGrowth,
}

impl SamplingOpts {
    fn config(&self) -> ProfileConfig {
        let side_bin = match (self.side_bin_width, self.side_bins) {
            (Some(h), _) => SideBin::Width(h),
            (None, Some(c)) => SideBin::Count(c),
            (None, None) => SideBin::Auto,
        };
        ProfileConfig {
            sample_fraction: self.m,
            seed: self.seed,
            side_bin,
            rho_method: match self.rho_method {
                RhoAlgo::Minmax => RhoMethod::Minmax,
                RhoAlgo::BallGrowth => RhoMethod::BallGrowth,
            },
            cluster: self
                .clusters
                .zip(self.per_cluster)
                .map(|(clusters, per_cluster)| ClusterSampling {
                    clusters,
                    per_cluster,
                }),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridOpts {
    #[arg(long, default_value_t = 50)]
    pub grid_r: usize,
    #[arg(long, default_value_t = 50)]
    pub grid_rho: usize,
    /// Compare raw radii instead of radii divided by each profile's largest.
    #[arg(long)]
    pub no_normalize_r: bool,
    /// Upper end of the r axis when radii are not normalized (default: largest radius seen).
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub r_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_weight: f64,
}

impl GridOpts {
    fn grid<'a>(&self, profiles: impl IntoIterator<Item = &'a CurvatureProfile>) -> GridSpec {
        let r_hi = if self.no_normalize_r {
            self.r_max.unwrap_or_else(|| {
                profiles
                    .into_iter()
                    .filter_map(|p| p.max_r())
                    .fold(0.0, f64::max)
                    .max(f64::MIN_POSITIVE)
            })
        } else {
            1.0
        };
        GridSpec {
            r_nodes: self.grid_r,
            rho_nodes: self.grid_rho,
            r_range: (0.0, r_hi),
            rho_range: (1.0, 2.0),
            normalize_r: !self.no_normalize_r,
            r_weight: self.r_weight,
            rho_weight: self.rho_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TypicalKind {
    Mean,
    Median,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    /// Edge list, distance-matrix CSV or point-cloud CSV.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub graph: GraphOpts,
    #[command(flatten)]
    pub sampling: SamplingOpts,
    /// Output prefix; writes PREFIX.json, PREFIX.long.csv and PREFIX.summary.csv
    /// (default: input path without extension).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-scale statistic for the summary CSV; `median` adds a median column.
    #[arg(long, value_enum, default_value_t = TypicalKind::Mean)]
    pub typical: TypicalKind,
    /// Also write a gnuplot script plotting the long CSV.
    #[arg(long)]
    pub gnuplot_script: Option<PathBuf>,
}

fn run_config<T: Serialize>(command: &str, args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::json!({ "command": command, "args": serde_json::to_value(args)? }))
}

fn profile_of(loaded: &Loaded, sampling: &SamplingOpts) -> Result<CurvatureProfile> {
    let mut p = build_profile(&loaded.metric, &sampling.config())?;
    p.meta.graph = loaded.graph.clone();
    Ok(p)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn profile(args: ProfileArgs) -> Result<()> {
    let loaded = load(&args.input, args.format, &args.graph)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if !loaded.metric.is_connected() {
        log::warn!(
            "input has {} components; triples spanning two are skipped",
            loaded
                .metric
                .components()
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len()
        );
    }
    let mut p = profile_of(&loaded, &args.sampling)?;
    p.meta.config = Some(run_config("profile", &args)?);
    if p.is_empty() {
        return Err(curvprof::Error::EmptyProfile(None).into());
    }
    let prefix = args
        .output
        .clone()
        .unwrap_or_else(|| args.input.with_extension(""));
    let json = with_suffix(&prefix, ".json");
    let long = with_suffix(&prefix, ".long.csv");
    let summary = with_suffix(&prefix, ".summary.csv");
    let mut w = report::create(&json)?;
    report::write_json(&p, &mut w)?;
    w.flush()?;
    let mut w = report::create(&long)?;
    report::write_long_csv(&p, &mut w)?;
    w.flush()?;
    let mut w = report::create(&summary)?;
    report::write_summary_csv(&p, args.typical == TypicalKind::Median, &mut w)?;
    w.flush()?;
    if let Some(script) = &args.gnuplot_script {
        let mut w = report::create(script)?;
        report::write_gnuplot(&long, &mut w)?;
        w.flush()?;
    }
    println!(
        "{} scales, {} triangles -> {}",
        p.records.len(),
        p.triangle_count(),
        summary.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Profile JSON written by `profile`.
    pub first: PathBuf,
    pub second: PathBuf,
    #[command(flatten)]
    pub grid: GridOpts,
    /// Write the JSON report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Include every flow of the optimal plan.
    #[arg(long)]
    pub plan: bool,
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let read = |p: &Path| report::read_json(p).with_context(|| format!("reading {}", p.display()));
    let (a, b) = (read(&args.first)?, read(&args.second)?);
    let grid = args.grid.grid([&a, &b]);
    let (pa, pb) = (to_distribution(&a, &grid)?, to_distribution(&b, &grid)?);
    let plan = wasserstein1_plan(&pa, &pb)?;
    let moved: f64 = plan
        .flows
        .iter()
        .filter(|&&(i, j, _)| pa.support[i] != pb.support[j])
        .map(|f| f.2)
        .sum();
    let mut report = serde_json::json!({
        "w1": plan.cost,
        "grid": grid,
        "plan_summary": {
            "flows": plan.flows.len(),
            "support_first": pa.support.len(),
            "support_second": pb.support.len(),
            "moved_mass": moved,
        },
        "config": run_config("compare", &args)?,
    });
    if args.plan {
        report["plan"] = serde_json::to_value(&plan.flows)?;
    }
    let text = serde_json::to_string_pretty(&report)?;
    match &args.output {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Mds,
    Isomap,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedSource {
    #[arg(long, value_enum, default_value_t = EmbedMethod::Mds)]
    pub method: EmbedMethod,
    /// Neighbors of the Isomap graph.
    #[arg(long = "isomap-k", default_value_t = 10)]
    pub isomap_k: usize,
}

/// Input distances that embeddings should reproduce, and the input indices
/// they cover.
fn ambient_distances(loaded: &Loaded) -> DistanceMatrix {
    match (&loaded.points, &loaded.ambient) {
        (Some(p), _) => p.distance_matrix(),
        (None, Some(d)) => d.clone(),
        (None, None) => loaded.metric.clone(),
    }
}

fn decomposition(loaded: &Loaded, src: &EmbedSource) -> Result<(MdsDecomposition, Vec<usize>)> {
    let d = ambient_distances(loaded);
    match src.method {
        EmbedMethod::Mds => {
            let n = d.n();
            Ok((MdsDecomposition::new(&d)?, (0..n).collect()))
        }
        EmbedMethod::Isomap => {
            let g = knn_graph(&d, src.isomap_k)?.to_graph();
            let (geo, kept) = geodesic_metric(&g)?;
            Ok((MdsDecomposition::new(&geo)?, kept))
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub source: EmbedSource,
    /// Target dimensions, e.g. `1-8` or `2,3,5`.
    #[arg(long, default_value = "2")]
    pub dim: String,
    /// Directory for `embedding_d<D>.csv` files.
    #[arg(short, long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn embed(args: EmbedArgs) -> Result<()> {
    let dims = parse_dims(&args.dim)?;
    // the raw input is embedded; no neighborhood graph is needed
    let graph = GraphOpts {
        k: None,
        kmin: 1,
        kmax: 1,
        eps: None,
        metric: crate::input::MetricKind::Euclidean,
        direction: crate::input::Direction::Asc,
    };
    let loaded = load(&args.input, args.format, &graph)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let (dec, kept) = decomposition(&loaded, &args.source)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut summary = Vec::new();
    for &d in &dims {
        let e = dec.embed(d).with_context(|| format!("dimension {d}"))?;
        let path = args.out_dir.join(format!("embedding_d{d}.csv"));
        let mut w = report::create(&path)?;
        let header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        e.points.write_csv(&mut w)?;
        w.flush()?;
        summary.push(serde_json::to_value(&e)?);
    }
    let meta = serde_json::json!({
        "embeddings": summary,
        "kept": kept,
        "config": run_config("embed", &args)?,
    });
    fs::write(
        args.out_dir.join("embedding.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    println!(
        "wrote {} embedding(s) to {}",
        dims.len(),
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Er,
    Ws,
    Circle,
    Plane,
    Tree,
    DlaTree,
    GaussianIsometric,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Vertex or point count (er, ws, circle, plane, gaussian-isometric).
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 4.0)]
    pub avg_degree: f64,
    /// Lattice degree of the Watts–Strogatz ring.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, default_value_t = 10)]
    pub branches: usize,
    #[arg(long, default_value_t = 300)]
    pub nodes_per_branch: usize,
    /// Dimensions per branch of the DLA tree.
    #[arg(long, default_value_t = 1)]
    pub subdim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub length_jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Intrinsic dimension of the Gaussian cloud.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, env = "CURVPROF_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Where gaussian-isometric writes the low-dimensional cloud.
    #[arg(long)]
    pub low_output: Option<PathBuf>,
}

fn write_points(p: &PointCloud, path: &Path) -> Result<()> {
    let mut w = report::create(path)?;
    p.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let out = &args.output;
    let write_graph = |g: curvprof::Graph| -> Result<()> {
        let mut w = report::create(out)?;
        g.write_edge_list(&mut w)?;
        w.flush()?;
        Ok(())
    };
    match args.kind {
        Kind::Er => write_graph(generators::erdos_renyi(args.n, args.avg_degree, args.seed)?)?,
        Kind::Ws => write_graph(generators::watts_strogatz(
            args.n, args.k, args.beta, args.seed,
        )?)?,
        Kind::Tree => write_graph(generators::tree_graph(args.branching, args.depth)?)?,
        Kind::Circle => {
            let d = generators::circle_sample(args.n, args.seed)?;
            let mut w = report::create(out)?;
            d.write_csv(&mut w)?;
            w.flush()?;
        }
        Kind::Plane => write_points(&generators::plane_sample(args.n, args.seed)?, out)?,
        Kind::DlaTree => {
            let params = DlaParams {
                branches: args.branches,
                nodes_per_branch: args.nodes_per_branch,
                subdim: args.subdim,
                length_jitter: args.length_jitter,
                noise: args.noise,
            };
            write_points(&generators::dla_tree(&params, args.seed)?, out)?;
        }
        Kind::GaussianIsometric => {
            let (x, y) = generators::gaussian_isometric(args.n, args.dim, args.seed)?;
            write_points(&y, out)?;
            if let Some(low) = &args.low_output {
                write_points(&x, low)?;
            }
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Original data: edge list, distance matrix or point cloud.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub graph: GraphOpts,
    #[command(flatten)]
    pub sampling: SamplingOpts,
    #[command(flatten)]
    pub source: EmbedSource,
    /// Candidate dimensions, e.g. `1-8`.
    #[arg(long, default_value = "1-8", conflicts_with = "embeddings_dir")]
    pub dims: String,
    /// Use the CSV embeddings in this directory (one per dimension) instead
    /// of computing them.
    #[arg(long)]
    pub embeddings_dir: Option<PathBuf>,
    /// k of the plain kNN graph built on each embedding (default: --k or --kmin).
    #[arg(long)]
    pub embed_k: Option<usize>,
    #[command(flatten)]
    pub grid: GridOpts,
    /// CSV file for the `d,w1` curve.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn embedding_profile(
    cloud: &PointCloud,
    k: usize,
    sampling: &SamplingOpts,
) -> Result<CurvatureProfile> {
    let g = knn_graph(cloud, k)?.to_graph();
    let d = shortest_path_matrix(&g)?;
    Ok(build_profile(&d, &sampling.config())?)
}

fn external_embeddings(dir: &Path, n: usize) -> Result<BTreeMap<usize, PointCloud>> {
    let mut out = BTreeMap::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let cloud = load_external_embedding(&path, Some(n))
            .with_context(|| format!("reading {}", path.display()))?;
        if out.insert(cloud.dim(), cloud).is_some() {
            bail!(
                "two embeddings of dimension {} in {}",
                out.len(),
                dir.display()
            );
        }
    }
    if out.is_empty() {
        bail!("no CSV embeddings found in {}", dir.display());
    }
    Ok(out)
}

pub fn estimate_dim(args: EstimateArgs) -> Result<()> {
    let loaded = load(&args.input, args.format, &args.graph)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let original = profile_of(&loaded, &args.sampling)?;
    let n = loaded.metric.n();
    let clouds: BTreeMap<usize, PointCloud> = match &args.embeddings_dir {
        Some(dir) => external_embeddings(dir, n)?,
        None => {
            let (dec, kept) = decomposition(&loaded, &args.source)?;
            if kept.len() != n {
                bail!("the Isomap graph is disconnected; embeddings would not cover every point");
            }
            parse_dims(&args.dims)?
                .into_iter()
                .map(|d| {
                    Ok((
                        d,
                        dec.embed(d)
                            .with_context(|| format!("dimension {d}"))?
                            .points,
                    ))
                })
                .collect::<Result<_>>()?
        }
    };
    let k = args.embed_k.or(args.graph.k).unwrap_or(args.graph.kmin);
    let mut embedded = BTreeMap::new();
    for (&d, cloud) in &clouds {
        let p = embedding_profile(cloud, k, &args.sampling)
            .with_context(|| format!("dimension {d}"))?;
        embedded.insert(d, p);
    }
    let grid = args
        .grid
        .grid(std::iter::once(&original).chain(embedded.values()));
    let est = estimate_dimension(&original, &embedded, &grid)?;
    let mut csv = String::from("d,w1\n");
    for (d, w) in &est.curve {
        csv.push_str(&format!("{d},{w}\n"));
    }
    match &args.output {
        Some(path) => {
            let header = format!(
                "# config {}\n",
                serde_json::to_string(&run_config("estimate-dim", &args)?)?
            );
            fs::write(path, header + &csv)?;
        }
        None => print!("{csv}"),
    }
    println!("d_best={}", est.d_best);
    println!("d_elbow={}", est.d_elbow);
    if !est.empty.is_empty() {
        let dims: Vec<String> = est.empty.iter().map(|d| d.to_string()).collect();
        println!("no_triangles={}", dims.join(","));
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RhoArgs {
    pub input: PathBuf,
    /// Three 0-based vertex indices.
    #[arg(num_args = 3, required = true)]
    pub vertices: Vec<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub graph: GraphOpts,
    #[arg(long)]
    pub json: bool,
}

pub fn rho(args: RhoArgs) -> Result<()> {
    let loaded = load(&args.input, args.format, &args.graph)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let d = &loaded.metric;
    let v = [args.vertices[0], args.vertices[1], args.vertices[2]];
    if let Some(&bad) = v.iter().find(|&&x| x >= d.n()) {
        bail!("vertex {bad} out of range for {} vertices", d.n());
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if d.is_sentinel(v[i], v[j]) {
            return Err(curvprof::Error::CrossComponent(v[i], v[j]).into());
        }
    }
    let (d01, d02, d12) = (d.get(v[0], v[1]), d.get(v[0], v[2]), d.get(v[1], v[2]));
    let g = gromov_products(d01, d02, d12);
    let shape = lambda_measure(d01, d02, d12)?;
    let r = rho_general(d, v)?;
    if args.json {
        let out = serde_json::json!({
            "vertices": v,
            "distances": [d01, d02, d12],
            "gromov": g.as_array(),
            "lambda": shape.lambda,
            "equilateral": shape.is_equilateral,
            "degenerate": shape.is_degenerate,
            "rho": r.rho,
            "witness": r.witness,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        let tag = if shape.is_equilateral {
            " (equilateral)"
        } else if shape.is_degenerate {
            " (degenerate)"
        } else {
            ""
        };
        println!("vertices  {} {} {}", v[0], v[1], v[2]);
        println!("distances {d01} {d02} {d12}");
        let [g0, g1, g2] = g.as_array();
        println!("gromov    {g0} {g1} {g2}");
        println!("lambda    {}{tag}", shape.lambda);
        println!("rho       {}", r.rho);
        println!("witness   {}", r.witness);
    }
    Ok(())
}
