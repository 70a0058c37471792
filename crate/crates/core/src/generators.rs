//! Seeded synthetic spaces: model networks, reference geometries, the
//! DLA-style artificial tree and isometrically embedded Gaussian clouds.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_build::PointCloud;
use crate::metric::{DistanceMatrix, Graph};

/// Extra ambient dimensions added by [`gaussian_isometric`].
pub const ISOMETRIC_PADDING: usize = 50;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi `G(n, p)` with `p = avg_degree / (n − 1)`.
pub fn erdos_renyi(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param(format!("n must be at least 2, got {n}")));
    }
    if !(avg_degree > 0.0 && avg_degree <= (n - 1) as f64) {
        return Err(Error::param(format!(
            "average degree must lie in (0, {}], got {avg_degree}",
            n - 1
        )));
    }
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    let mut rng = rng(seed);
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if p >= 1.0 || rng.random::<f64>() < p {
                g.add_unit_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Watts–Strogatz small world: a ring lattice where each vertex links to its
/// `k/2` clockwise neighbors, then each such edge has its far end rewired
/// with probability `beta`.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::param(format!(
            "k must be a positive even integer, got {k}"
        )));
    }
    if k >= n {
        return Err(Error::param(format!(
            "k must be less than n = {n}, got {k}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("beta must lie in [0, 1], got {beta}")));
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for s in 1..=k / 2 {
            edges.insert(key(i, (i + s) % n));
        }
    }
    let mut rng = rng(seed);
    for s in 1..=k / 2 {
        for i in 0..n {
            let j = (i + s) % n;
            if rng.random::<f64>() >= beta {
                continue;
            }
            // vertex i already adjacent to everyone: nothing to rewire to
            let degree = edges.iter().filter(|&&(a, b)| a == i || b == i).count();
            if degree >= n - 1 {
                continue;
            }
            let target = loop {
                let t = rng.random_range(0..n);
                if t != i && !edges.contains(&key(i, t)) {
                    break t;
                }
            };
            edges.remove(&key(i, j));
            edges.insert(key(i, target));
        }
    }
    Graph::from_edges(n, edges.into_iter().map(|(a, b)| (a, b, 1.0)))
}

/// Angles of `n` uniform points on the circle, sorted.
pub fn circle_angles(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::param(format!("circle sample needs n ≥ 3, got {n}")));
    }
    let mut rng = rng(seed);
    let mut theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
    theta.sort_unstable_by(f64::total_cmp);
    Ok(theta)
}

/// Arc-length metric of the given angles on a circle of the given radius.
pub fn circle_metric(angles: &[f64], radius: f64) -> Result<DistanceMatrix> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let n = angles.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = (angles[i] - angles[j]).abs().rem_euclid(TAU);
            data[i * n + j] = radius * delta.min(TAU - delta);
        }
    }
    DistanceMatrix::from_dense(n, data)
}

/// `n` uniform points on the unit circle with the intrinsic (arc) metric.
pub fn circle_sample(n: usize, seed: u64) -> Result<DistanceMatrix> {
    circle_metric(&circle_angles(n, seed)?, 1.0)
}

/// `n` uniform points in the unit square.
pub fn plane_sample(n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = rng(seed);
    let coords: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(n, 2, coords)
}

/// Balanced rooted `branching`-ary tree of the given depth, unit edges,
/// vertices numbered breadth-first from the root.
pub fn tree_graph(branching: usize, depth: usize) -> Result<Graph> {
    if branching < 2 || depth < 1 {
        return Err(Error::param(format!(
            "tree needs branching ≥ 2 and depth ≥ 1, got {branching} and {depth}"
        )));
    }
    let n = (0..=depth as u32).map(|l| branching.pow(l)).sum::<usize>();
    let internal = (n - 1) / branching;
    let mut g = Graph::new(n);
    for p in 0..internal {
        for c in 1..=branching {
            g.add_unit_edge(p, p * branching + c)?;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlaParams {
    pub branches: usize,
    pub nodes_per_branch: usize,
    pub subdim: usize,
    /// Branch lengths for later branches vary uniformly in `[l(1−j), l(1+j)]`.
    pub length_jitter: f64,
    /// Standard deviation of Gaussian noise added to every coordinate.
    pub noise: f64,
}

impl Default for DlaParams {
    fn default() -> Self {
        DlaParams {
            branches: 10,
            nodes_per_branch: 300,
            subdim: 1,
            length_jitter: 0.0,
            noise: 0.0,
        }
    }
}

/// Artificial tree in `ℝ^{k·m}` with `k` branches of `l` points each.
///
/// Branch 1 walks from the origin in dimensions `0..m`, one unit per step in
/// each of them. Branch `j` starts at a point of an earlier branch and then
/// moves only in its own block `(j−1)m..jm`. Branches 2 and 3 start at the
/// end of branch 1; later branches start at a seeded random point of a
/// seeded random earlier branch.
pub fn dla_tree(params: &DlaParams, seed: u64) -> Result<PointCloud> {
    let DlaParams {
        branches: k,
        nodes_per_branch: l,
        subdim: m,
        length_jitter,
        noise,
    } = *params;
    if k < 2 || l < 2 || m < 1 {
        return Err(Error::param(format!(
            "dla tree needs k ≥ 2, l ≥ 2, m ≥ 1, got k={k}, l={l}, m={m}"
        )));
    }
    if !(0.0..1.0).contains(&length_jitter) {
        return Err(Error::param(format!(
            "length jitter must lie in [0, 1), got {length_jitter}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::param(format!(
            "noise must be nonnegative, got {noise}"
        )));
    }
    let dim = k * m;
    let mut rng = rng(seed);
    let mut coords: Vec<f64> = Vec::with_capacity(k * l * dim);
    let mut step_len = vec![1.0; k];
    for j in 0..k {
        let origin: Vec<f64> = match j {
            0 => vec![0.0; dim],
            1 | 2 => coords[(l - 1) * dim..l * dim].to_vec(),
            _ => {
                let parent = rng.random_range(0..j);
                let at = rng.random_range(0..l);
                let row = parent * l + at;
                coords[row * dim..(row + 1) * dim].to_vec()
            }
        };
        if j > 0 && length_jitter > 0.0 {
            step_len[j] = 1.0 + length_jitter * (2.0 * rng.random::<f64>() - 1.0);
        }
        for t in 0..l {
            let mut p = origin.clone();
            for c in &mut p[j * m..(j + 1) * m] {
                *c += t as f64 * step_len[j];
            }
            coords.extend(p);
        }
    }
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::param(e.to_string()))?;
        for c in &mut coords {
            *c += normal.sample(&mut rng);
        }
    }
    PointCloud::new(k * l, dim, coords)
}

/// `N` standard Gaussian points in `ℝⁿ` and their image `Y = X Qᵀ` in
/// `ℝ^{n+50}`, where `Q` has orthonormal columns from the QR factorization
/// of a Gaussian `(n+50) × n` matrix.
pub fn gaussian_isometric(points: usize, n: usize, seed: u64) -> Result<(PointCloud, PointCloud)> {
    if n < 1 || points <= n {
        return Err(Error::param(format!(
            "need N > n ≥ 1, got N = {points}, n = {n}"
        )));
    }
    let big_d = n + ISOMETRIC_PADDING;
    let mut rng = rng(seed);
    let x = DMatrix::<f64>::from_fn(points, n, |_, _| StandardNormal.sample(&mut rng));
    let a = DMatrix::<f64>::from_fn(big_d, n, |_, _| StandardNormal.sample(&mut rng));
    let q = a.qr().q();
    let y = &x * q.transpose();
    let rows = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..m.nrows())
            .flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
            .collect()
    };
    Ok((
        PointCloud::new(points, n, rows(&x))?,
        PointCloud::new(points, big_d, rows(&y))?,
    ))
}
