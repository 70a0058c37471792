use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use curvprof::graph_build::{adaptive_graph, epsilon_graph, knn_graph, Ambient, DensityDirection};
use curvprof::io::read_numeric_csv;
use curvprof::{shortest_path_matrix, DistanceMatrix, Graph, NeighborhoodGraph, PointCloud};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Edges,
    Distance,
    Points,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Precomputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

/// Neighborhood-graph options for point clouds.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphOpts {
    /// Vanilla kNN graph with this k.
    #[arg(long, conflicts_with_all = ["eps", "kmin", "kmax"])]
    pub k: Option<usize>,
    /// Smallest per-point k of the density-adaptive graph.
    #[arg(long, default_value_t = 15)]
    pub kmin: usize,
    /// Largest per-point k of the density-adaptive graph.
    #[arg(long, default_value_t = 20)]
    pub kmax: usize,
    /// Connect all pairs closer than this instead.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Distances used to pick neighbors. `precomputed` reads the input as a
    /// distance matrix and builds the graph on it.
    #[arg(long, value_enum, default_value_t = MetricKind::Euclidean)]
    pub metric: MetricKind,
    /// Whether denser points get more neighbors (asc) or fewer (desc).
    #[arg(long = "density-k-direction", value_enum, default_value_t = Direction::Asc)]
    pub direction: Direction,
}

impl GraphOpts {
    pub fn build<'a>(
        &self,
        ambient: impl Into<Ambient<'a>>,
    ) -> curvprof::Result<NeighborhoodGraph> {
        if let Some(eps) = self.eps {
            epsilon_graph(ambient, eps)
        } else if let Some(k) = self.k {
            knn_graph(ambient, k)
        } else {
            let dir = match self.direction {
                Direction::Asc => DensityDirection::Asc,
                Direction::Desc => DensityDirection::Desc,
            };
            adaptive_graph(ambient, self.kmin, self.kmax, dir)
        }
    }

    /// Whether any flag asks for a neighborhood graph.
    fn explicit(&self) -> bool {
        self.k.is_some() || self.eps.is_some() || self.metric == MetricKind::Precomputed
    }
}

/// A metric space ready for profiling.
pub struct Loaded {
    pub metric: DistanceMatrix,
    pub points: Option<PointCloud>,
    /// Raw input distances when they differ from `metric`.
    pub ambient: Option<DistanceMatrix>,
    pub graph: Option<serde_json::Value>,
}

pub fn detect_format(path: &Path) -> Result<Format> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    if ext != "csv" {
        return Ok(Format::Edges);
    }
    let rows = read_numeric_csv(path, true)?;
    let n = rows.len();
    let square = rows.iter().all(|r| r.len() == n);
    let zero_diag = square && (0..n).all(|i| rows[i][i] == 0.0);
    let symmetric = square && (0..n).all(|i| (0..i).all(|j| rows[i][j] == rows[j][i]));
    Ok(if n > 1 && zero_diag && symmetric {
        Format::Distance
    } else {
        Format::Points
    })
}

fn graph_metric(graph: &NeighborhoodGraph) -> Result<(DistanceMatrix, serde_json::Value)> {
    let d = shortest_path_matrix(&graph.to_graph())?;
    let mut info = serde_json::to_value(graph.params())?;
    info["edges"] = graph.edges().len().into();
    Ok((d, info))
}

pub fn load(path: &Path, format: Option<Format>, opts: &GraphOpts) -> Result<Loaded> {
    let format = match (format, opts.metric) {
        (Some(f), _) => f,
        (None, MetricKind::Precomputed) => Format::Distance,
        (None, MetricKind::Euclidean) => detect_format(path)?,
    };
    log::info!("reading {} as {format:?}", path.display());
    let loaded = match format {
        Format::Edges => {
            let g = Graph::read_edge_list(path)?;
            let weighted = !g.is_unweighted();
            Loaded {
                metric: shortest_path_matrix(&g)?,
                points: None,
                ambient: None,
                graph: Some(serde_json::json!({
                    "rule": "edge-list",
                    "edges": g.edge_count(),
                    "weighted": weighted,
                })),
            }
        }
        Format::Distance => {
            let d = DistanceMatrix::read_csv(path)?;
            if opts.explicit() {
                let ng = opts.build(&d)?;
                let (metric, info) = graph_metric(&ng)?;
                Loaded {
                    metric,
                    points: None,
                    ambient: Some(d),
                    graph: Some(info),
                }
            } else {
                Loaded {
                    metric: d,
                    points: None,
                    ambient: None,
                    graph: None,
                }
            }
        }
        Format::Points => {
            let p = PointCloud::read_csv(path)?;
            let ng = opts.build(&p)?;
            let (metric, info) = graph_metric(&ng)?;
            Loaded {
                metric,
                ambient: None,
                points: Some(p),
                graph: Some(info),
            }
        }
    };
    if loaded.metric.n() < 3 {
        bail!(
            "input has {} points; at least 3 are needed",
            loaded.metric.n()
        );
    }
    Ok(loaded)
}

/// Parses `1,2,5` or `1-8` (or a mix) into a sorted list.
pub fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let mut dims = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a
                .trim()
                .parse()
                .with_context(|| format!("bad dimension range {part:?}"))?;
            let b: usize = b
                .trim()
                .parse()
                .with_context(|| format!("bad dimension range {part:?}"))?;
            if a > b {
                bail!("empty dimension range {part:?}");
            }
            dims.extend(a..=b);
        } else {
            dims.push(
                part.parse()
                    .with_context(|| format!("bad dimension {part:?}"))?,
            );
        }
    }
    dims.sort_unstable();
    dims.dedup();
    if dims.is_empty() || dims[0] == 0 {
        bail!("dimensions must be positive integers");
    }
    Ok(dims)
}
