//! Distance matrices, shortest paths and three-point invariants.
//!
//! Every curvature computation runs on a [`DistanceMatrix`]. Pairs in
//! different connected components hold a finite sentinel (100 times the
//! largest finite distance) so the matrix stays finite; component labels are
//! kept alongside so that sentinel entries are never mistaken for geometry.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between the disconnected-pair sentinel and the largest finite distance.
pub const SENTINEL_FACTOR: f64 = 100.0;

/// Relative tolerance for side-length equality on exact metrics.
pub const EQ_TOL: f64 = 1e-9;

/// Weighted undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
        }
    }

    /// Builds a graph from `(u, v, w)` triples, validating indices and weights.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Graph::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::param(format!(
                "edge ({u}, {v}) out of range for {} vertices",
                self.n
            )));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidWeight { u, v, weight: w });
        }
        self.edges.push((u, v, w));
        Ok(())
    }

    pub fn add_unit_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.add_edge(u, v, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|&(_, _, w)| w == 1.0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v, _) in &self.edges {
            if u != v {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            if u == v {
                continue;
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    /// Component label per vertex; labels are the smallest vertex index in each component.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for &(u, v, _) in &self.edges {
            uf.union(u, v);
        }
        uf.labels()
    }

    /// Multiplies every edge weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Graph> {
        Graph::from_edges(
            self.n,
            self.edges.iter().map(|&(u, v, w)| (u, v, w * factor)),
        )
    }

    /// Parses an edge list: one `u v [w]` per line, `#` comments.
    ///
    /// Indices are treated as 1-based when the smallest index present is 1,
    /// 0-based otherwise. A `# <n> vertices` comment, as written by
    /// [`Graph::write_edge_list`], fixes 0-based indexing and the vertex count.
    pub fn parse_edge_list(text: &str, path: &Path) -> Result<Graph> {
        let mut raw = Vec::new();
        let mut declared: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if let (Some(num), Some(word)) = (words.next(), words.next()) {
                    if word.trim_end_matches(',') == "vertices" {
                        declared = num.parse().ok().or(declared);
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut index = |name: &str| -> Result<usize> {
                let tok = fields
                    .next()
                    .ok_or_else(|| Error::parse(path, lineno + 1, format!("missing {name}")))?;
                tok.parse::<usize>().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("bad vertex index {tok:?}"))
                })
            };
            let u = index("source")?;
            let v = index("target")?;
            let w = match fields.next() {
                Some(tok) => tok
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno + 1, format!("bad weight {tok:?}")))?,
                None => 1.0,
            };
            if fields.next().is_some() {
                return Err(Error::parse(path, lineno + 1, "too many fields"));
            }
            raw.push((u, v, w));
        }
        if raw.is_empty() {
            return Err(Error::EmptyInput("edge list has no edges"));
        }
        let min = raw.iter().map(|&(u, v, _)| u.min(v)).min().unwrap_or(0);
        let offset = usize::from(min == 1 && declared.is_none());
        let max = raw.iter().map(|&(u, v, _)| u.max(v)).max().unwrap_or(0);
        let n = match declared {
            Some(n) if n > max => n,
            Some(n) => {
                return Err(Error::parse(
                    path,
                    0,
                    format!("vertex {max} out of range for {n} vertices"),
                ))
            }
            None => max + 1 - offset,
        };
        Graph::from_edges(
            n,
            raw.into_iter().map(|(u, v, w)| (u - offset, v - offset, w)),
        )
    }

    pub fn read_edge_list(path: &Path) -> Result<Graph> {
        let text = fs::read_to_string(path)?;
        Graph::parse_edge_list(&text, path)
    }

    /// Writes a 0-based edge list; weights are omitted for unit-weight graphs.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let unit = self.is_unweighted();
        writeln!(out, "# {} vertices, {} edges", self.n, self.edges.len())?;
        for &(u, v, w) in &self.edges {
            if unit {
                writeln!(out, "{u} {v}")?;
            } else {
                writeln!(out, "{u} {v} {w}")?;
            }
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so labels are canonical
        match ra.cmp(&rb) {
            Ordering::Less => self.parent[rb] = ra,
            Ordering::Greater => self.parent[ra] = rb,
            Ordering::Equal => {}
        }
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

/// Symmetric `n × n` matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    component: Vec<usize>,
    sentinel: Option<f64>,
    diameter: f64,
    integral: bool,
}

impl DistanceMatrix {
    /// Assembles a matrix from raw finite distances and component labels,
    /// writing the sentinel into every cross-component entry.
    fn assemble(n: usize, mut data: Vec<f64>, component: Vec<usize>) -> Self {
        let mut diameter = 0.0f64;
        let mut integral = true;
        let mut disconnected = false;
        for i in 0..n {
            for j in 0..n {
                if component[i] == component[j] {
                    let d = data[i * n + j];
                    diameter = diameter.max(d);
                    integral &= d.fract() == 0.0;
                } else {
                    disconnected = true;
                }
            }
        }
        let sentinel = disconnected.then_some({
            if diameter > 0.0 {
                SENTINEL_FACTOR * diameter
            } else {
                SENTINEL_FACTOR
            }
        });
        if let Some(s) = sentinel {
            for i in 0..n {
                for j in 0..n {
                    if component[i] != component[j] {
                        data[i * n + j] = s;
                    }
                }
            }
        }
        DistanceMatrix {
            n,
            data,
            component,
            sentinel,
            diameter,
            integral,
        }
    }

    /// Validates a dense row-major matrix.
    ///
    /// Non-finite entries mark disconnected pairs. A matrix previously written
    /// with a sentinel is recognised when its largest entry is exactly
    /// `SENTINEL_FACTOR` times the largest remaining entry.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("distance matrix has zero rows"));
        }
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, found {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            let dii = data[i * n + i];
            if dii != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "d[{i}][{i}] = {dii}, expected 0"
                )));
            }
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if a.is_nan() || b.is_nan() || a < 0.0 || b < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) is negative or NaN"
                    )));
                }
                if a != b && !(a.is_infinite() && b.is_infinite()) {
                    let scale = a.abs().max(b.abs()).max(1.0);
                    if (a - b).abs() > 1e-9 * scale {
                        return Err(Error::InvalidMatrix(format!(
                            "asymmetric entry ({i}, {j}): {a} vs {b}"
                        )));
                    }
                }
            }
        }
        let finite_max = data
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max);
        let below = data
            .iter()
            .copied()
            .filter(|&d| d.is_finite() && d < finite_max)
            .fold(0.0, f64::max);
        let sentinel_marked =
            finite_max > 0.0 && below > 0.0 && finite_max == SENTINEL_FACTOR * below;
        let is_gap = |d: f64| !d.is_finite() || (sentinel_marked && d == finite_max);

        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if !is_gap(data[i * n + j]) {
                    uf.union(i, j);
                }
            }
        }
        let component = uf.labels();
        let mut sym = data;
        for i in 0..n {
            for j in (i + 1)..n {
                if component[i] == component[j] {
                    let d = sym[i * n + j];
                    if is_gap(d) {
                        return Err(Error::InvalidMatrix(format!(
                            "pair ({i}, {j}) is marked disconnected but both lie in one component"
                        )));
                    }
                    sym[j * n + i] = d;
                }
            }
        }
        Ok(DistanceMatrix::assemble(n, sym, component))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        DistanceMatrix::from_dense(n, data)
    }

    /// Reads a square, header-free, comma-separated matrix.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = crate::io::read_numeric_csv(path, false)?;
        DistanceMatrix::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest finite (same-component) distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn sentinel(&self) -> Option<f64> {
        self.sentinel
    }

    pub fn is_connected(&self) -> bool {
        self.sentinel.is_none()
    }

    pub fn component(&self, i: usize) -> usize {
        self.component[i]
    }

    pub fn components(&self) -> &[usize] {
        &self.component
    }

    #[inline]
    pub fn is_sentinel(&self, i: usize, j: usize) -> bool {
        self.component[i] != self.component[j]
    }

    /// True when every finite distance is a whole number (hop-count metrics).
    pub fn is_integral(&self) -> bool {
        self.integral
    }

    /// Vertices of the largest connected component, ascending; ties go to the
    /// component with the smallest label.
    pub fn largest_component(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n];
        for &c in &self.component {
            sizes[c] += 1;
        }
        let best = (0..self.n)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        (0..self.n).filter(|&i| self.component[i] == best).collect()
    }

    /// Restriction to the given vertex subset, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Result<DistanceMatrix> {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                data.push(if self.is_sentinel(i, j) {
                    f64::INFINITY
                } else {
                    self.get(i, j)
                });
            }
        }
        DistanceMatrix::from_dense(m, data)
    }

    /// Multiplies every finite distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<DistanceMatrix> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::param(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let n = self.n;
        let data = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if self.is_sentinel(i, j) {
                    0.0
                } else {
                    self.data[k] * factor
                }
            })
            .collect();
        Ok(DistanceMatrix::assemble(n, data, self.component.clone()))
    }

    /// Triples `(i, j, k)` with `d[i][k] > d[i][j] + d[j][k]` beyond a relative
    /// tolerance. Sentinel pairs are skipped.
    pub fn triangle_violations(&self, rel_tol: f64) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..n {
                if self.is_sentinel(i, k) {
                    continue;
                }
                let dik = self.get(i, k);
                for j in 0..n {
                    if self.is_sentinel(i, j) || self.is_sentinel(j, k) {
                        continue;
                    }
                    let via = self.get(i, j) + self.get(j, k);
                    if dik > via + rel_tol * via.max(1.0) {
                        out.push((i, j, k));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(HeapEntry(0.0, source)));
    while let Some(Reverse(HeapEntry(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse(HeapEntry(nd, v)));
            }
        }
    }
    dist
}

fn bfs(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0.0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1.0;
        for &(v, _) in &adj[u] {
            if dist[v].is_infinite() {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs shortest-path distances.
///
/// Unit-weight graphs use BFS; anything else runs Dijkstra from every source.
/// Sources are processed in parallel; each writes only its own row.
pub fn shortest_path_matrix(graph: &Graph) -> Result<DistanceMatrix> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::EmptyInput("graph has zero vertices"));
    }
    for &(u, v, w) in graph.edges() {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidWeight { u, v, weight: w });
        }
    }
    let adj = graph.adjacency();
    let unit = graph.is_unweighted();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            if unit {
                bfs(&adj, s)
            } else {
                dijkstra(&adj, s)
            }
        })
        .collect();
    let component = graph.components();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            // float path sums can differ by an ulp between directions; keep the upper triangle
            let d = rows[i][j];
            let d = if d.is_finite() { d } else { 0.0 };
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix::assemble(n, data, component))
}

/// Gromov products of a triple: the radii `r_i` with `r_i + r_j = d(x_i, x_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GromovProducts {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl GromovProducts {
    pub fn as_array(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3]
    }

    /// False when some product is negative, i.e. the distances violate the
    /// triangle inequality.
    pub fn is_metric(&self) -> bool {
        let scale = (self.r1 + self.r2 + self.r3).abs().max(f64::MIN_POSITIVE);
        self.as_array().iter().all(|&r| r >= -EQ_TOL * scale)
    }
}

/// Solves `r1 + r2 = d12`, `r1 + r3 = d13`, `r2 + r3 = d23`.
pub fn gromov_products(d12: f64, d13: f64, d23: f64) -> GromovProducts {
    GromovProducts {
        r1: (d12 + d13 - d23) / 2.0,
        r2: (d12 + d23 - d13) / 2.0,
        r3: (d13 + d23 - d12) / 2.0,
    }
}

/// Shape of a triangle measured by how far it is from degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleShape {
    pub lambda: f64,
    pub is_degenerate: bool,
    pub is_equilateral: bool,
}

/// Largest `α` with `α·d_ij ≤ d_ik + d_jk` for every side of the triple.
///
/// Only the longest side can bind, so `λ = (perimeter − d_max) / d_max`.
pub fn lambda_measure(d12: f64, d13: f64, d23: f64) -> Result<TripleShape> {
    let sides = [d12, d13, d23];
    if sides.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::param(format!(
            "side lengths must be finite and nonnegative, got {sides:?}"
        )));
    }
    if sides.contains(&0.0) {
        return Err(Error::Degenerate(
            "zero side length: two points of the triple coincide".into(),
        ));
    }
    let max = d12.max(d13).max(d23);
    let min = d12.min(d13).min(d23);
    let lambda = (d12 + d13 + d23 - max) / max;
    Ok(TripleShape {
        lambda,
        is_degenerate: (lambda - 1.0).abs() <= EQ_TOL,
        is_equilateral: (max - min) <= EQ_TOL * max,
    })
}
