//! Curvature profiles as discrete measures on a common `(r, ρ)` grid, exact
//! 1-Wasserstein distances between them, and embedding-dimension estimation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};

/// Uniform rectangular grid in `(r, ρ)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_nodes: usize,
    pub rho_nodes: usize,
    pub r_range: (f64, f64),
    pub rho_range: (f64, f64),
    /// Divide each profile's `r` by its own largest `r` before snapping.
    pub normalize_r: bool,
    pub r_weight: f64,
    pub rho_weight: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_nodes: 50,
            rho_nodes: 50,
            r_range: (0.0, 1.0),
            rho_range: (1.0, 2.0),
            normalize_r: true,
            r_weight: 1.0,
            rho_weight: 1.0,
        }
    }
}

fn axis_step(nodes: usize, (lo, hi): (f64, f64)) -> f64 {
    (hi - lo) / (nodes - 1) as f64
}

fn snap(x: f64, nodes: usize, range: (f64, f64)) -> usize {
    let t = ((x - range.0) / axis_step(nodes, range)).round();
    t.clamp(0.0, (nodes - 1) as f64) as usize
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r_nodes < 2 || self.rho_nodes < 2 {
            return Err(Error::param("grid needs at least 2 nodes per axis"));
        }
        for (name, (lo, hi)) in [("r", self.r_range), ("rho", self.rho_range)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::param(format!(
                    "{name} range must be finite and increasing"
                )));
            }
        }
        if !(self.r_weight > 0.0 && self.rho_weight > 0.0) {
            return Err(Error::param("axis weights must be positive"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.r_nodes * self.rho_nodes
    }

    /// `(r, ρ)` coordinates of a node.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.rho_nodes, idx % self.rho_nodes);
        let at = |k: usize, nodes: usize, (lo, hi): (f64, f64)| {
            lo + (hi - lo) * k as f64 / (nodes - 1) as f64
        };
        (
            at(i, self.r_nodes, self.r_range),
            at(j, self.rho_nodes, self.rho_range),
        )
    }

    /// Index of the node nearest to `(r, ρ)`; points outside the grid go
    /// to the nearest boundary node.
    pub fn nearest_node(&self, r: f64, rho: f64) -> usize {
        snap(r, self.r_nodes, self.r_range) * self.rho_nodes
            + snap(rho, self.rho_nodes, self.rho_range)
    }

    /// Weighted Euclidean ground distance between two nodes.
    pub fn ground_distance(&self, a: usize, b: usize) -> f64 {
        let (ra, pa) = self.node(a);
        let (rb, pb) = self.node(b);
        (self.r_weight * (ra - rb)).hypot(self.rho_weight * (pa - pb))
    }

    /// Length of one cell diagonal under the ground metric.
    pub fn cell_diagonal(&self) -> f64 {
        (self.r_weight * axis_step(self.r_nodes, self.r_range))
            .hypot(self.rho_weight * axis_step(self.rho_nodes, self.rho_range))
    }
}

/// Probability measure supported on grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistribution {
    pub grid: GridSpec,
    /// Node indices, strictly increasing.
    pub support: Vec<usize>,
    pub mass: Vec<f64>,
}

impl ProfileDistribution {
    /// Builds a distribution from `(node, weight)` pairs; weights are
    /// aggregated per node and normalized.
    pub fn from_weights(
        grid: GridSpec,
        weights: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        grid.validate()?;
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (node, w) in weights {
            if node >= grid.node_count() {
                return Err(Error::param(format!("grid node {node} out of range")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::param(format!("mass must be nonnegative, got {w}")));
            }
            *acc.entry(node).or_insert(0.0) += w;
        }
        acc.retain(|_, w| *w > 0.0);
        let total: f64 = acc.values().sum();
        if acc.is_empty() || total <= 0.0 {
            return Err(Error::EmptyProfile(None));
        }
        Ok(ProfileDistribution {
            grid,
            support: acc.keys().copied().collect(),
            mass: acc.values().map(|w| w / total).collect(),
        })
    }

    /// Support points as `(r, ρ)` coordinates.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.support.iter().map(|&s| self.grid.node(s)).collect()
    }
}

/// Snaps every triangle observation of `profile` to its nearest grid node;
/// node mass is the fraction of triangles landing there.
pub fn to_distribution(profile: &CurvatureProfile, grid: &GridSpec) -> Result<ProfileDistribution> {
    grid.validate()?;
    let max_r = profile.max_r().ok_or(Error::EmptyProfile(None))?;
    let scale = if grid.normalize_r { max_r } else { 1.0 };
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (r, rho) in profile.observations() {
        *counts.entry(grid.nearest_node(r / scale, rho)).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyProfile(None));
    }
    Ok(ProfileDistribution {
        grid: *grid,
        support: counts.keys().copied().collect(),
        mass: counts.values().map(|&c| c as f64 / total as f64).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// `(source support index, target support index, amount)`, positive amounts only.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    fn transposed(self) -> Self {
        let mut flows: Vec<_> = self.flows.into_iter().map(|(i, j, f)| (j, i, f)).collect();
        flows.sort_unstable_by_key(|a| (a.0, a.1));
        TransportPlan {
            flows,
            cost: self.cost,
        }
    }
}

/// Exact `W₁` between two distributions on the same grid.
pub fn wasserstein1(p: &ProfileDistribution, q: &ProfileDistribution) -> Result<f64> {
    Ok(wasserstein1_plan(p, q)?.cost)
}

/// Exact `W₁` together with an optimal plan.
pub fn wasserstein1_plan(
    p: &ProfileDistribution,
    q: &ProfileDistribution,
) -> Result<TransportPlan> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    if p.support.is_empty() || q.support.is_empty() {
        return Err(Error::EmptyProfile(None));
    }
    if p == q {
        let flows = p.mass.iter().enumerate().map(|(i, &m)| (i, i, m)).collect();
        return Ok(TransportPlan { flows, cost: 0.0 });
    }
    // a fixed orientation makes the result exactly symmetric
    let key = |d: &ProfileDistribution| {
        (
            d.support.clone(),
            d.mass.iter().map(|m| m.to_bits()).collect::<Vec<_>>(),
        )
    };
    let swap = key(p) > key(q);
    let (a, b) = if swap { (q, p) } else { (p, q) };
    let cost: Vec<f64> = a
        .support
        .iter()
        .flat_map(|&s| b.support.iter().map(move |&t| a.grid.ground_distance(s, t)))
        .collect();
    let plan = transport_simplex(&a.mass, &b.mass, &cost)?;
    Ok(if swap { plan.transposed() } else { plan })
}

/// Minimum-cost transport between `supply` and `demand` (equal totals) with a
/// dense row-major cost matrix, by the primal network simplex method.
///
/// The initial basis routes everything through an artificial root with
/// prohibitive arc costs. Leaving arcs are chosen so the basis stays
/// strongly feasible, which rules out cycling on degenerate pivots.
pub fn transport_simplex(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::param("transport problem dimensions do not match"));
    }
    if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::param(
            "transport costs must be finite and nonnegative",
        ));
    }
    NetworkSimplex::new(supply, demand, cost).solve()
}

struct NetworkSimplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    eps: f64,
    /// Basis arcs and their flows; always `m + n` entries.
    tree: Vec<(usize, f64)>,
    parent: Vec<usize>,
    /// Index into `tree` of the arc joining a node to its parent.
    parent_slot: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl<'a> NetworkSimplex<'a> {
    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let nodes = m + n + 1;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let art_cost = (max_cost + 1.0) * nodes as f64;
        // potentials reach art_cost in magnitude, so round-off in reduced
        // costs grows with it
        let eps = 1e-12 * art_cost.max(1.0) * 4.0 + 1e-14;
        let mut tree = Vec::with_capacity(m + n);
        for (i, &s) in supply.iter().enumerate() {
            tree.push((m * n + i, s));
        }
        for (j, &d) in demand.iter().enumerate() {
            tree.push((m * n + m + j, d));
        }
        NetworkSimplex {
            m,
            n,
            cost,
            art_cost,
            eps,
            tree,
            parent: vec![NONE; nodes],
            parent_slot: vec![NONE; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
        }
    }

    fn root(&self) -> usize {
        self.m + self.n
    }

    /// `(tail, head, cost)` of an arc. Real arcs run source → sink; the
    /// artificial arc of a source points at the root, that of a sink away
    /// from it.
    fn arc(&self, id: usize) -> (usize, usize, f64) {
        let (m, n) = (self.m, self.n);
        if id < m * n {
            (id / n, m + id % n, self.cost[id])
        } else {
            let v = id - m * n;
            if v < m {
                (v, self.root(), self.art_cost)
            } else {
                (self.root(), v, self.art_cost)
            }
        }
    }

    fn rebuild(&mut self) {
        let nodes = self.m + self.n + 1;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (slot, &(id, _)) in self.tree.iter().enumerate() {
            let (u, v, _) = self.arc(id);
            adj[u].push(slot);
            adj[v].push(slot);
        }
        let root = self.root();
        self.parent.fill(NONE);
        self.parent[root] = root;
        self.depth[root] = 0;
        self.pi[root] = 0.0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &slot in &adj[u] {
                let (a, b, c) = self.arc(self.tree[slot].0);
                let v = if a == u { b } else { a };
                if self.parent[v] != NONE {
                    continue;
                }
                self.parent[v] = u;
                self.parent_slot[v] = slot;
                self.depth[v] = self.depth[u] + 1;
                // reduced cost c − π(tail) + π(head) vanishes on the tree
                self.pi[v] = if a == u {
                    self.pi[u] - c
                } else {
                    self.pi[u] + c
                };
                queue.push_back(v);
            }
        }
    }

    fn reduced(&self, id: usize) -> f64 {
        let (u, v, c) = self.arc(id);
        c - self.pi[u] + self.pi[v]
    }

    /// Block search over real arcs, resuming where the last search stopped.
    fn entering(&self, start: &mut usize, block: usize) -> Option<usize> {
        let total = self.m * self.n;
        let mut best: Option<(usize, f64)> = None;
        let mut seen = 0;
        let mut id = *start;
        while seen < total {
            let rc = self.reduced(id);
            if rc < -self.eps && best.is_none_or(|(_, b)| rc < b) {
                best = Some((id, rc));
            }
            seen += 1;
            id = (id + 1) % total;
            if seen % block == 0 && best.is_some() {
                break;
            }
        }
        *start = id;
        best.map(|(id, _)| id)
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (u, v, _) = self.arc(entering);
        // cycle orientation follows the entering arc: apex → … → u → v → … → apex
        let mut up_u = Vec::new();
        let mut up_v = Vec::new();
        let (mut a, mut b) = (u, v);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                up_u.push(a);
                a = self.parent[a];
            } else {
                up_v.push(b);
                b = self.parent[b];
            }
        }
        // (slot, forward) in traversal order
        let mut cycle: Vec<(usize, bool)> = Vec::with_capacity(up_u.len() + up_v.len());
        for &x in up_u.iter().rev() {
            let slot = self.parent_slot[x];
            let (tail, _, _) = self.arc(self.tree[slot].0);
            // walking down from parent to x
            cycle.push((slot, tail != x));
        }
        for &x in &up_v {
            let slot = self.parent_slot[x];
            let (tail, _, _) = self.arc(self.tree[slot].0);
            // walking up from x to parent
            cycle.push((slot, tail == x));
        }
        let mut delta = f64::INFINITY;
        let mut leaving = None;
        for (pos, &(slot, forward)) in cycle.iter().enumerate() {
            if !forward && self.tree[slot].1 <= delta {
                delta = self.tree[slot].1;
                leaving = Some(pos);
            }
        }
        let Some(leaving) = leaving else {
            return Err(Error::Internal("transport problem is unbounded".into()));
        };
        for &(slot, forward) in &cycle {
            if forward {
                self.tree[slot].1 += delta;
            } else {
                self.tree[slot].1 -= delta;
            }
        }
        let slot = cycle[leaving].0;
        self.tree[slot] = (entering, delta);
        Ok(())
    }

    fn solve(mut self) -> Result<TransportPlan> {
        let total = self.m * self.n;
        let block = ((total as f64).sqrt().ceil() as usize).max(10).min(total);
        let limit = 50 * (self.m + self.n + 1) * (self.m + self.n + 1) + 1000;
        let mut start = 0;
        self.rebuild();
        let mut iterations = 0usize;
        while let Some(e) = self.entering(&mut start, block) {
            self.pivot(e)?;
            self.rebuild();
            iterations += 1;
            if iterations > limit {
                return Err(Error::Internal("transport simplex did not converge".into()));
            }
        }
        let mut flows: Vec<(usize, usize, f64)> = self
            .tree
            .iter()
            .filter(|&&(id, f)| id < total && f > 0.0)
            .map(|&(id, f)| (id / self.n, id % self.n, f))
            .collect();
        flows.sort_unstable_by_key(|a| (a.0, a.1));
        let cost = flows
            .iter()
            .map(|&(i, j, f)| f * self.cost[i * self.n + j])
            .sum::<f64>();
        Ok(TransportPlan { flows, cost })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Argmin of the curve, smallest dimension on ties.
    pub d_best: usize,
    /// Smallest dimension whose `W₁` is within 10% of the minimum.
    pub d_elbow: usize,
    pub curve: Vec<(usize, f64)>,
    /// Dimensions whose embedding has no equilateral triangles. They sit on
    /// the curve at the largest ground distance of the grid.
    #[serde(default)]
    pub empty: Vec<usize>,
}

/// Compares the original profile with each embedded profile on a shared grid.
pub fn estimate_dimension(
    original: &CurvatureProfile,
    embedded: &BTreeMap<usize, CurvatureProfile>,
    grid: &GridSpec,
) -> Result<DimensionEstimate> {
    if embedded.is_empty() {
        return Err(Error::param("no candidate dimensions supplied"));
    }
    let base = to_distribution(original, grid)?;
    // W₁ between measures on the grid never exceeds this
    let ceiling = grid.ground_distance(0, grid.node_count() - 1);
    let scored: Vec<(usize, Option<f64>)> = embedded
        .par_iter()
        .map(|(&d, prof)| match to_distribution(prof, grid) {
            Ok(dist) => Ok((d, Some(wasserstein1(&base, &dist)?))),
            Err(Error::EmptyProfile(_)) => Ok((d, None)),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let empty: Vec<usize> = scored
        .iter()
        .filter(|s| s.1.is_none())
        .map(|s| s.0)
        .collect();
    if empty.len() == scored.len() {
        return Err(Error::EmptyProfile(empty.first().copied()));
    }
    if !empty.is_empty() {
        log::warn!("no equilateral triangles in the embeddings of dimension {empty:?}");
    }
    let curve = scored
        .into_iter()
        .map(|(d, w)| (d, w.unwrap_or(ceiling)))
        .collect();
    let mut est = summarize_curve(curve);
    est.empty = empty;
    Ok(est)
}

/// Best and elbow dimensions of a `(d, W₁)` curve sorted by `d`.
pub fn summarize_curve(curve: Vec<(usize, f64)>) -> DimensionEstimate {
    let (d_best, lo) =
        curve.iter().copied().fold(
            (0, f64::INFINITY),
            |best, (d, w)| if w < best.1 { (d, w) } else { best },
        );
    let cut = lo * 1.1;
    let d_elbow = curve.iter().find(|c| c.1 <= cut).map_or(d_best, |c| c.0);
    DimensionEstimate {
        d_best,
        d_elbow,
        curve,
        empty: Vec::new(),
    }
}
