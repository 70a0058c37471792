//! Scale-indexed curvature profiles from equilateral vertex triples.
//!
//! For a triple with Gromov products `r_i`, the expansion factor
//!
//! ```text
//! ρ = min_x max_i d(x_i, x) / r_i
//! ```
//!
//! is the smallest factor by which the three balls `B(x_i, r_i)` must be
//! scaled to share a point. It lies in `[1, 2]` for every metric triple:
//! `1` for tree-like (tripod) configurations, `2/√3` for a Euclidean
//! equilateral triangle and `2` for three equidistant points on a circle.
//!
//! [`build_profile`] sweeps all side lengths up to the diameter, samples
//! equilateral triples at each and aggregates their ρ values per scale.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{gromov_products, DistanceMatrix, EQ_TOL};

/// ρ of a hyperconvex (tree-like) space.
pub const RHO_TREE: f64 = 1.0;
/// ρ of an equilateral triangle in the Euclidean plane, `2/√3`.
pub const RHO_EUCLIDEAN: f64 = 1.154_700_538_379_251_5;
/// ρ of three equidistant points on a circle.
pub const RHO_CIRCLE: f64 = 2.0;

/// Values within this distance of the `[1, 2]` bounds are round-off.
const RHO_SNAP: f64 = 1e-12;

const NO_LEVEL: u32 = u32::MAX;
const BIN_GUARD: f64 = 1e-9;

/// Three vertices at (quantized) common distance `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilateralTriple {
    /// Sorted ascending.
    pub vertices: [usize; 3],
    /// Common side length, or the bin label for quantized metrics.
    pub side: f64,
    /// `side / 2`.
    pub r: f64,
    /// Gromov products from the actual pairwise distances, aligned with `vertices`.
    pub gromov: [f64; 3],
}

impl EquilateralTriple {
    /// Builds a triple from vertex indices, reading the Gromov products off `d`.
    pub fn new(d: &DistanceMatrix, v: [usize; 3], side: f64) -> Result<Self> {
        let mut vertices = v;
        vertices.sort_unstable();
        let [a, b, c] = vertices;
        if a == b || b == c {
            return Err(Error::Degenerate(format!(
                "repeated vertex in triple {v:?}"
            )));
        }
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if d.is_sentinel(x, y) {
                return Err(Error::CrossComponent(x, y));
            }
        }
        let g = gromov_products(d.get(a, b), d.get(a, c), d.get(b, c));
        Ok(EquilateralTriple {
            vertices,
            side,
            r: side / 2.0,
            gromov: g.as_array(),
        })
    }
}

/// ρ of one triple and the vertex attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoValue {
    pub rho: f64,
    /// Weighted circumcenter: smallest-index minimizer.
    pub witness: usize,
}

#[inline]
fn ratio(dist: f64, radius: f64) -> f64 {
    if radius > 0.0 {
        dist / radius
    } else if dist == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Weighted distance `max_i d(x_i, x) / r_i` of every vertex in the triple's component.
fn weighted_eccentricities<'a>(
    d: &'a DistanceMatrix,
    vertices: [usize; 3],
    radii: [f64; 3],
) -> impl Iterator<Item = (usize, f64)> + 'a {
    let rows = vertices.map(|v| d.row(v));
    let comp = d.component(vertices[0]);
    (0..d.n())
        .filter(move |&x| d.component(x) == comp)
        .map(move |x| {
            let m = (0..3)
                .map(|i| ratio(rows[i][x], radii[i]))
                .fold(0.0f64, f64::max);
            (x, m)
        })
}

fn snap_rho(rho: f64) -> f64 {
    if (rho - RHO_TREE).abs() <= RHO_SNAP {
        RHO_TREE
    } else if (rho - RHO_CIRCLE).abs() <= RHO_SNAP {
        RHO_CIRCLE
    } else {
        rho
    }
}

/// Whether `rho` lies in the admissible range `[1, 2]`.
pub fn rho_in_range(rho: f64) -> bool {
    (RHO_TREE..=RHO_CIRCLE).contains(&rho)
}

fn minmax(d: &DistanceMatrix, vertices: [usize; 3], radii: [f64; 3]) -> RhoValue {
    let (witness, rho) = weighted_eccentricities(d, vertices, radii).fold(
        (vertices[0], f64::INFINITY),
        |best, (x, m)| if m < best.1 { (x, m) } else { best },
    );
    RhoValue {
        rho: snap_rho(rho),
        witness,
    }
}

/// Exact ρ by direct minimization over all vertices.
pub fn rho_minmax(d: &DistanceMatrix, t: &EquilateralTriple) -> RhoValue {
    minmax(d, t.vertices, t.gromov)
}

/// ρ of an arbitrary triple, using its own (possibly unequal) Gromov products.
pub fn rho_general(d: &DistanceMatrix, v: [usize; 3]) -> Result<RhoValue> {
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if d.is_sentinel(v[i], v[j]) {
            return Err(Error::CrossComponent(v[i], v[j]));
        }
    }
    let g = gromov_products(d.get(v[0], v[1]), d.get(v[0], v[2]), d.get(v[1], v[2]));
    if !g.is_metric() {
        return Err(Error::Degenerate(format!(
            "triple {v:?} violates the triangle inequality"
        )));
    }
    Ok(minmax(d, v, g.as_array()))
}

/// How [`rho_ball_growth`] enlarges the balls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStep {
    /// Jump between the radii at which some ball gains a vertex. Exact.
    #[default]
    Ladder,
    /// Add a fixed amount to the radius `r` at every step.
    Fixed(f64),
}

/// ρ by growing the three balls from their Gromov-product radii until a
/// common vertex appears; returns `r_out / r_in`.
pub fn rho_ball_growth(
    d: &DistanceMatrix,
    t: &EquilateralTriple,
    step: GrowthStep,
) -> Result<RhoValue> {
    let comp = d.component(t.vertices[0]);
    let members: Vec<usize> = (0..d.n()).filter(|&x| d.component(x) == comp).collect();
    let rows = t.vertices.map(|v| d.row(v));
    match step {
        GrowthStep::Ladder => {
            // (scale at which ball i reaches x, x)
            let mut events: Vec<(f64, usize)> = Vec::with_capacity(3 * members.len());
            for i in 0..3 {
                events.extend(members.iter().map(|&x| (ratio(rows[i][x], t.gromov[i]), x)));
            }
            events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut covered = vec![0u8; d.n()];
            let mut scale = RHO_TREE;
            let mut next = 0;
            loop {
                let mut complete: Option<usize> = None;
                while next < events.len() && events[next].0 <= scale {
                    let x = events[next].1;
                    covered[x] += 1;
                    if covered[x] == 3 {
                        complete = Some(complete.map_or(x, |c: usize| c.min(x)));
                    }
                    next += 1;
                }
                if let Some(witness) = complete {
                    // an earlier-completed vertex with a smaller index may exist
                    let witness = (0..witness).find(|&x| covered[x] == 3).unwrap_or(witness);
                    return Ok(RhoValue {
                        rho: snap_rho(scale),
                        witness,
                    });
                }
                match events.get(next) {
                    Some(&(s, _)) if s.is_finite() => scale = s,
                    _ => {
                        return Err(Error::Internal(format!(
                            "balls around {:?} never meet",
                            t.vertices
                        )))
                    }
                }
            }
        }
        GrowthStep::Fixed(step) => {
            if !(step > 0.0) || !step.is_finite() {
                return Err(Error::param(format!(
                    "growth step must be positive, got {step}"
                )));
            }
            let r_in = t.r;
            let limit = d.diameter() + step;
            let mut k = 0u64;
            loop {
                let radius = r_in + k as f64 * step;
                let scale = radius / r_in;
                let hit = members
                    .iter()
                    .copied()
                    .find(|&x| (0..3).all(|i| ratio(rows[i][x], t.gromov[i]) <= scale));
                if let Some(witness) = hit {
                    return Ok(RhoValue {
                        rho: snap_rho(scale),
                        witness,
                    });
                }
                if radius > limit {
                    return Err(Error::Internal(format!(
                        "ball growth around {:?} passed the diameter",
                        t.vertices
                    )));
                }
                k += 1;
            }
        }
    }
}

/// ρ for three points on a circle whose longest side subtends the central
/// angle `angle`: `2π / angle − 1`.
pub fn rho_circle_closed_form(angle: f64) -> Result<f64> {
    if !(angle > 0.0 && angle < std::f64::consts::TAU) {
        return Err(Error::param(format!(
            "angle must lie in (0, 2π), got {angle}"
        )));
    }
    Ok(std::f64::consts::TAU / angle - 1.0)
}

/// Restricts which vertices may form triples: `clusters` groups from a
/// farthest-point partition, `per_cluster` vertices drawn from each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSampling {
    pub clusters: usize,
    pub per_cluster: usize,
}

/// How side lengths are matched when deciding that a triple is equilateral.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideBin {
    /// Exact integer sides on hop-count metrics, otherwise `Count(50)`.
    #[default]
    Auto,
    /// Bins of the given absolute width.
    Width(f64),
    /// `diameter / count` wide bins.
    Count(usize),
}

pub const DEFAULT_SIDE_BINS: usize = 50;

/// Per-scale summary statistic used as the "typical" ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Typical {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMethod {
    #[default]
    Minmax,
    BallGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub sample_fraction: f64,
    pub seed: u64,
    pub side_bin: SideBin,
    pub rho_method: RhoMethod,
    pub cluster: Option<ClusterSampling>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            sample_fraction: 0.1,
            seed: 0,
            side_bin: SideBin::Auto,
            rho_method: RhoMethod::Minmax,
            cluster: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub r: f64,
    pub count: usize,
    pub mean_rho: f64,
    pub median_rho: f64,
    pub rho_values: Vec<f64>,
}

impl ScaleRecord {
    pub fn typical(&self, which: Typical) -> f64 {
        match which {
            Typical::Mean => self.mean_rho,
            Typical::Median => self.median_rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub n: usize,
    pub sample_fraction: f64,
    pub seed: u64,
    pub diameter: f64,
    /// `"exact"` or `"binned"`.
    pub quantization: String,
    pub side_bin_width: Option<f64>,
    pub rho_method: RhoMethod,
    pub cluster: Option<ClusterSampling>,
    /// ρ values outside `[1, 2]`; nonzero only for non-metric input.
    pub rho_out_of_range: usize,
    /// Graph construction parameters, when the metric came from a neighborhood graph.
    #[serde(default)]
    pub graph: Option<serde_json::Value>,
    /// Resolved run configuration of the producing command.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub meta: ProfileMeta,
    pub records: Vec<ScaleRecord>,
}

impl CurvatureProfile {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_r(&self) -> Option<f64> {
        self.records.last().map(|r| r.r)
    }

    pub fn triangle_count(&self) -> usize {
        self.records.iter().map(|r| r.count).sum()
    }

    /// Every `(r, ρ)` observation, scale by scale.
    pub fn observations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records
            .iter()
            .flat_map(|rec| rec.rho_values.iter().map(move |&rho| (rec.r, rho)))
    }
}

/// Packed row-per-vertex bitsets.
struct BitRows {
    words: usize,
    bits: Vec<u64>,
}

impl BitRows {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitRows {
            words,
            bits: vec![0; n * words],
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1u64 << (j % 64);
    }

    fn iter_row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                (rest != 0).then(|| {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    w * 64 + b
                })
            })
        })
    }

    /// Smallest common element of rows `a` and `b`.
    fn first_common(&self, a: usize, b: usize) -> Option<usize> {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .enumerate()
            .find_map(|(w, (x, y))| {
                let both = x & y;
                (both != 0).then(|| w * 64 + both.trailing_zeros() as usize)
            })
    }
}

fn scale_seed(seed: u64, key: u64) -> u64 {
    // splitmix64 finalizer over seed and scale key
    let mut z = seed ^ key.rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Filter candidates, sample `⌈m·population⌉` of them, take the first triple
/// in lexicographic order through each sampled vertex, deduplicate.
fn sample_triples(
    rows: &BitRows,
    universe: &[usize],
    m: f64,
    population: usize,
    seed: u64,
) -> Vec<[usize; 3]> {
    let candidates: Vec<usize> = universe
        .iter()
        .copied()
        .filter(|&a| rows.iter_row(a).any(|j| rows.first_common(a, j).is_some()))
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    let want = ((m * population as f64).ceil() as usize).max(1);
    let sampled: Vec<usize> = if want >= candidates.len() {
        candidates
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), want)
            .into_iter()
            .map(|k| candidates[k])
            .collect();
        picked.sort_unstable();
        picked
    };
    let mut found = BTreeSet::new();
    for s in sampled {
        // the first j with a common neighbor only has common neighbors above j
        let hit = rows
            .iter_row(s)
            .find_map(|j| rows.first_common(s, j).map(|c| (j, c)));
        if let Some((j, c)) = hit {
            let mut t = [s, j, c];
            t.sort_unstable();
            found.insert(t);
        }
    }
    found.into_iter().collect()
}

/// Seeded sample of equilateral triples with the given side (exact match up
/// to a relative tolerance of `1e-9`).
pub fn find_equilateral_triples(
    d: &DistanceMatrix,
    side: f64,
    sample_fraction: f64,
    seed: u64,
) -> Result<Vec<EquilateralTriple>> {
    check_fraction(sample_fraction)?;
    if !(side > 0.0) {
        return Err(Error::param(format!("side must be positive, got {side}")));
    }
    let n = d.n();
    let mut rows = BitRows::new(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && !d.is_sentinel(i, j) && (d.get(i, j) - side).abs() <= EQ_TOL * side {
                rows.set(i, j);
            }
        }
    }
    let universe: Vec<usize> = (0..n).collect();
    sample_triples(
        &rows,
        &universe,
        sample_fraction,
        n,
        scale_seed(seed, side.to_bits()),
    )
    .into_iter()
    .map(|v| EquilateralTriple::new(d, v, side))
    .collect()
}

/// Every equilateral triple with the given side, in lexicographic order.
pub fn all_equilateral_triples(d: &DistanceMatrix, side: f64) -> Vec<EquilateralTriple> {
    let n = d.n();
    let eq =
        |i: usize, j: usize| !d.is_sentinel(i, j) && (d.get(i, j) - side).abs() <= EQ_TOL * side;
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !eq(a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if eq(a, c) && eq(b, c) {
                    out.push(EquilateralTriple::new(d, [a, b, c], side).expect("valid triple"));
                }
            }
        }
    }
    out
}

fn check_fraction(m: f64) -> Result<()> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::param(format!(
            "sample fraction must lie in (0, 1], got {m}"
        )));
    }
    Ok(())
}

/// Side-length quantization of a distance matrix.
struct ScaleIndex {
    levels: Vec<u32>,
    /// `(level, side label)` in ascending order.
    sides: Vec<(u32, f64)>,
    width: Option<f64>,
}

impl ScaleIndex {
    fn build(d: &DistanceMatrix, bin: SideBin) -> Result<Self> {
        let n = d.n();
        let diam = d.diameter();
        let width = match bin {
            SideBin::Auto if d.is_integral() => None,
            SideBin::Auto => Some(diam / DEFAULT_SIDE_BINS as f64),
            SideBin::Count(c) if c > 0 => Some(diam / c as f64),
            SideBin::Count(_) => return Err(Error::param("side bin count must be positive")),
            SideBin::Width(h) if h > 0.0 && h.is_finite() => Some(h),
            SideBin::Width(h) => {
                return Err(Error::param(format!(
                    "side bin width must be positive, got {h}"
                )))
            }
        };
        let level_of = |x: f64| -> u32 {
            let l = match width {
                None => x,
                // bin [l·h, (l+1)·h); the guard absorbs round-off at the edges
                Some(h) => (x / h + BIN_GUARD).floor(),
            };
            if l >= 1.0 && l < NO_LEVEL as f64 {
                l as u32
            } else {
                NO_LEVEL
            }
        };
        let mut levels = vec![NO_LEVEL; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && !d.is_sentinel(i, j) {
                    levels[i * n + j] = level_of(d.get(i, j));
                }
            }
        }
        let top = if diam > 0.0 { level_of(diam) } else { NO_LEVEL };
        let sides = if top == NO_LEVEL {
            Vec::new()
        } else {
            (1..=top)
                .map(|l| (l, width.map_or(l as f64, |h| l as f64 * h)))
                .collect()
        };
        Ok(ScaleIndex {
            levels,
            sides,
            width,
        })
    }

    fn rows(&self, n: usize, level: u32, in_universe: &[bool]) -> BitRows {
        let mut rows = BitRows::new(n);
        for i in (0..n).filter(|&i| in_universe[i]) {
            let lv = &self.levels[i * n..(i + 1) * n];
            for (j, &l) in lv.iter().enumerate() {
                if l == level && in_universe[j] {
                    rows.set(i, j);
                }
            }
        }
        rows
    }
}

/// Farthest-point partition into `clusters` groups, then a seeded draw of
/// `per_cluster` vertices from each.
fn cluster_subset(d: &DistanceMatrix, spec: ClusterSampling, seed: u64) -> Result<Vec<usize>> {
    let n = d.n();
    if spec.clusters == 0 || spec.per_cluster == 0 {
        return Err(Error::param("cluster sampling needs positive counts"));
    }
    let k = spec.clusters.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC1A5_7E25);
    let mut centers = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|x| d.get(centers[0], x)).collect();
    while centers.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        centers.push(far);
        for x in 0..n {
            nearest[x] = nearest[x].min(d.get(far, x));
        }
    }
    let mut groups = vec![Vec::new(); k];
    for x in 0..n {
        let c = (0..k)
            .min_by(|&a, &b| {
                d.get(centers[a], x)
                    .total_cmp(&d.get(centers[b], x))
                    .then(a.cmp(&b))
            })
            .unwrap_or(0);
        groups[c].push(x);
    }
    let mut subset = Vec::new();
    for g in groups {
        if g.len() <= spec.per_cluster {
            subset.extend(g);
        } else {
            subset.extend(
                index::sample(&mut rng, g.len(), spec.per_cluster)
                    .into_iter()
                    .map(|i| g[i]),
            );
        }
    }
    subset.sort_unstable();
    Ok(subset)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Curvature profile of a finite metric space.
///
/// Sides run over `1..=diameter` for hop-count metrics and over bin centers
/// otherwise. Triples touching two components are never formed. Scales are
/// processed in parallel and reduced in ascending order, so the result does
/// not depend on the thread count.
pub fn build_profile(d: &DistanceMatrix, config: &ProfileConfig) -> Result<CurvatureProfile> {
    check_fraction(config.sample_fraction)?;
    let n = d.n();
    let index = ScaleIndex::build(d, config.side_bin)?;
    let universe: Vec<usize> = match config.cluster {
        Some(spec) => cluster_subset(d, spec, config.seed)?,
        None => (0..n).collect(),
    };
    let mut in_universe = vec![false; n];
    for &u in &universe {
        in_universe[u] = true;
    }

    let per_scale: Vec<Result<Option<(ScaleRecord, usize)>>> = index
        .sides
        .par_iter()
        .map(|&(level, side)| {
            let rows = index.rows(n, level, &in_universe);
            let triples = sample_triples(
                &rows,
                &universe,
                config.sample_fraction,
                universe.len(),
                scale_seed(config.seed, level as u64),
            );
            if triples.is_empty() {
                return Ok(None);
            }
            let mut rho_values = Vec::with_capacity(triples.len());
            let mut bad = 0;
            for v in triples {
                let t = EquilateralTriple::new(d, v, side)?;
                let rho = match config.rho_method {
                    RhoMethod::Minmax => rho_minmax(d, &t),
                    RhoMethod::BallGrowth => rho_ball_growth(d, &t, GrowthStep::Ladder)?,
                }
                .rho;
                if !rho_in_range(rho) {
                    bad += 1;
                }
                rho_values.push(rho);
            }
            let count = rho_values.len();
            let mean_rho = rho_values.iter().sum::<f64>() / count as f64;
            Ok(Some((
                ScaleRecord {
                    r: side / 2.0,
                    count,
                    mean_rho,
                    median_rho: median(&rho_values),
                    rho_values,
                },
                bad,
            )))
        })
        .collect();

    let mut records = Vec::new();
    let mut out_of_range = 0;
    for item in per_scale {
        if let Some((rec, bad)) = item? {
            out_of_range += bad;
            records.push(rec);
        }
    }
    if out_of_range > 0 {
        log::warn!("{out_of_range} ρ value(s) fell outside [1, 2]; the input is not a metric");
    }
    Ok(CurvatureProfile {
        meta: ProfileMeta {
            n,
            sample_fraction: config.sample_fraction,
            seed: config.seed,
            diameter: d.diameter(),
            quantization: if index.width.is_some() {
                "binned"
            } else {
                "exact"
            }
            .into(),
            side_bin_width: index.width,
            rho_method: config.rho_method,
            cluster: config.cluster,
            rho_out_of_range: out_of_range,
            graph: None,
            config: None,
        },
        records,
    })
}
