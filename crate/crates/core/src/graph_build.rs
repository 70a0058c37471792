//! Neighborhood graphs over point clouds: ε-graph, symmetric kNN graph and
//! the density-adaptive kNN variant.
//!
//! All three constructors accept either Euclidean coordinates or a
//! precomputed distance matrix through [`Ambient`]. Neighbor search is exact;
//! ties in distance are broken by the smaller index, so construction is
//! fully deterministic.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DistanceMatrix, Graph};

/// `n` points in `dim`-dimensional space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(n: usize, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!(
                "a point cloud needs at least 2 points, got {n}"
            )));
        }
        if dim == 0 {
            return Err(Error::param("point dimension must be positive"));
        }
        if coords.len() != n * dim {
            return Err(Error::param(format!(
                "expected {} coordinates for {n}×{dim}, found {}",
                n * dim,
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::param(format!(
                "non-finite coordinate at point {} axis {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(PointCloud { n, dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::param("ragged point rows"));
        }
        PointCloud::new(rows.len(), dim, rows.concat())
    }

    /// Reads one point per row; a non-numeric header row is skipped.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = crate::io::read_numeric_csv(path, true)?;
        PointCloud::from_rows(&rows)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.point(i).iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Full Euclidean distance matrix.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.n;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.distance(i, j)).collect())
            .collect();
        DistanceMatrix::from_rows(&rows).expect("euclidean distances form a valid matrix")
    }
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Where pairwise distances come from.
#[derive(Debug, Clone, Copy)]
pub enum Ambient<'a> {
    Euclidean(&'a PointCloud),
    Precomputed(&'a DistanceMatrix),
}

impl Ambient<'_> {
    pub fn n(&self) -> usize {
        match self {
            Ambient::Euclidean(p) => p.n(),
            Ambient::Precomputed(d) => d.n(),
        }
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self {
            Ambient::Euclidean(p) => p.distance(i, j),
            Ambient::Precomputed(d) => d.get(i, j),
        }
    }

    fn metric_name(&self) -> &'static str {
        match self {
            Ambient::Euclidean(_) => "euclidean",
            Ambient::Precomputed(_) => "precomputed",
        }
    }
}

impl<'a> From<&'a PointCloud> for Ambient<'a> {
    fn from(p: &'a PointCloud) -> Self {
        Ambient::Euclidean(p)
    }
}

impl<'a> From<&'a DistanceMatrix> for Ambient<'a> {
    fn from(d: &'a DistanceMatrix) -> Self {
        Ambient::Precomputed(d)
    }
}

/// Whether denser regions receive more neighbors (`Asc`) or fewer (`Desc`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityDirection {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum ConstructionParams {
    Knn {
        k: usize,
        metric: String,
    },
    Epsilon {
        eps: f64,
        metric: String,
    },
    Adaptive {
        k_min: usize,
        k_max: usize,
        direction: DensityDirection,
        metric: String,
    },
}

/// Local density per point and the neighbor count derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScores {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub k_per_point: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    params: ConstructionParams,
    density: Option<DensityScores>,
}

impl NeighborhoodGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn density(&self) -> Option<&DensityScores> {
        self.density.as_ref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn to_graph(&self) -> Graph {
        Graph::from_edges(self.n, self.edges.iter().copied())
            .expect("neighborhood graph edges are valid")
    }
}

/// The `k` nearest other points of `i`, nearest first, ties by index.
fn nearest(ambient: &Ambient<'_>, i: usize, k: usize) -> Vec<(f64, usize)> {
    let mut cand: Vec<(f64, usize)> = (0..ambient.n())
        .filter(|&j| j != i)
        .map(|j| (ambient.distance(i, j), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand
}

fn neighbor_lists(ambient: &Ambient<'_>, k: usize) -> Vec<Vec<(f64, usize)>> {
    (0..ambient.n())
        .into_par_iter()
        .map(|i| nearest(ambient, i, k))
        .collect()
}

/// Symmetric union of directed neighbor choices. Coincident pairs carry no edge.
fn union_edges(
    ambient: &Ambient<'_>,
    choices: impl Iterator<Item = (usize, usize)>,
) -> Vec<(usize, usize, f64)> {
    let set: BTreeSet<(usize, usize)> = choices
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| (i.min(j), i.max(j)))
        .collect();
    set.into_iter()
        .filter_map(|(i, j)| {
            let w = ambient.distance(i, j);
            (w > 0.0).then_some((i, j, w))
        })
        .collect()
}

fn check_points(ambient: &Ambient<'_>) -> Result<usize> {
    let n = ambient.n();
    if n < 2 {
        return Err(Error::param(format!("need at least 2 points, got {n}")));
    }
    Ok(n)
}

/// Symmetric k-nearest-neighbor graph: `i ~ j` when either is among the
/// other's `k` nearest.
pub fn knn_graph<'a>(points: impl Into<Ambient<'a>>, k: usize) -> Result<NeighborhoodGraph> {
    let ambient = points.into();
    let n = check_points(&ambient)?;
    if k == 0 || k >= n {
        return Err(Error::param(format!(
            "k must satisfy 1 ≤ k < n = {n}, got {k}"
        )));
    }
    let lists = neighbor_lists(&ambient, k);
    let edges = union_edges(
        &ambient,
        lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&(_, j)| (i, j))),
    );
    Ok(NeighborhoodGraph {
        n,
        edges,
        params: ConstructionParams::Knn {
            k,
            metric: ambient.metric_name().into(),
        },
        density: None,
    })
}

/// All pairs at distance at most `eps`.
pub fn epsilon_graph<'a>(points: impl Into<Ambient<'a>>, eps: f64) -> Result<NeighborhoodGraph> {
    let ambient = points.into();
    let n = check_points(&ambient)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    let edges: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            ((i + 1)..n).filter_map(move |j| {
                let w = ambient.distance(i, j);
                (w > 0.0 && w <= eps).then_some((i, j, w))
            })
        })
        .collect();
    Ok(NeighborhoodGraph {
        n,
        edges,
        params: ConstructionParams::Epsilon {
            eps,
            metric: ambient.metric_name().into(),
        },
        density: None,
    })
}

/// Density scores from the mean distance to each point's `k_max` nearest
/// neighbors.
pub fn density_scores(
    neighbors: &[Vec<(f64, usize)>],
    k_min: usize,
    k_max: usize,
    direction: DensityDirection,
) -> DensityScores {
    let mut raw: Vec<f64> = neighbors
        .iter()
        .map(|l| {
            let mean = l.iter().map(|&(d, _)| d).sum::<f64>() / l.len() as f64;
            1.0 / mean
        })
        .collect();
    let finite_max = raw
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .fold(f64::NAN, f64::max);
    let coincident = raw.iter().filter(|r| !r.is_finite()).count();
    if coincident > 0 {
        log::warn!(
            "{coincident} point(s) have zero mean neighbor distance; density set to the global maximum"
        );
        let fill = if finite_max.is_nan() { 1.0 } else { finite_max };
        for r in raw.iter_mut().filter(|r| !r.is_finite()) {
            *r = fill;
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // spreads at round-off level count as constant density
    let normalized: Vec<f64> = if hi - lo > 1e-12 * hi.abs() {
        raw.iter().map(|r| (r - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; raw.len()]
    };
    let span = (k_max - k_min) as f64;
    let k_per_point = normalized
        .iter()
        .map(|&s| {
            let s = match direction {
                DensityDirection::Asc => s,
                DensityDirection::Desc => 1.0 - s,
            };
            (k_min as f64 + s * span).round() as usize
        })
        .collect();
    DensityScores {
        raw,
        normalized,
        k_per_point,
    }
}

/// kNN graph whose per-point `k` interpolates between `k_min` and `k_max`
/// by normalized local density.
pub fn adaptive_graph<'a>(
    points: impl Into<Ambient<'a>>,
    k_min: usize,
    k_max: usize,
    direction: DensityDirection,
) -> Result<NeighborhoodGraph> {
    let ambient = points.into();
    let n = check_points(&ambient)?;
    if k_min == 0 || k_min > k_max || k_max >= n {
        return Err(Error::param(format!(
            "need 1 ≤ k_min ≤ k_max < n = {n}, got k_min = {k_min}, k_max = {k_max}"
        )));
    }
    let lists = neighbor_lists(&ambient, k_max);
    let density = density_scores(&lists, k_min, k_max, direction);
    let edges = union_edges(
        &ambient,
        lists.iter().enumerate().flat_map(|(i, l)| {
            l[..density.k_per_point[i]]
                .iter()
                .map(move |&(_, j)| (i, j))
        }),
    );
    Ok(NeighborhoodGraph {
        n,
        edges,
        params: ConstructionParams::Adaptive {
            k_min,
            k_max,
            direction,
            metric: ambient.metric_name().into(),
        },
        density: Some(density),
    })
}
