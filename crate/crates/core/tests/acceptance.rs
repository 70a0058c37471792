//! Acceptance suite. Runs every criterion in order and prints one line each;
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use curvprof::curvature::{
    all_equilateral_triples, build_profile, rho_ball_growth, rho_general, rho_in_range, rho_minmax,
    CurvatureProfile, GrowthStep, ProfileConfig,
};
use curvprof::embedding::MdsDecomposition;
use curvprof::generators::{
    circle_angles, circle_metric, circle_sample, erdos_renyi, gaussian_isometric, plane_sample,
    tree_graph, watts_strogatz,
};
use curvprof::graph_build::{adaptive_graph, knn_graph, DensityDirection, PointCloud};
use curvprof::report::{write_long_csv, write_summary_csv};
use curvprof::transport::{estimate_dimension, wasserstein1, GridSpec, ProfileDistribution};
use curvprof::{shortest_path_matrix, DistanceMatrix, Graph};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every ρ produced anywhere in the suite.
#[derive(Default)]
struct RhoLog(Vec<f64>);

impl RhoLog {
    fn profile(&mut self, p: &CurvatureProfile) {
        self.0.extend(p.observations().map(|o| o.1));
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config(m: f64, seed: u64) -> ProfileConfig {
    ProfileConfig {
        sample_fraction: m,
        seed,
        ..Default::default()
    }
}

fn graph_metric(points: &PointCloud, k_min: usize, k_max: usize) -> DistanceMatrix {
    let g = adaptive_graph(points, k_min, k_max, DensityDirection::Asc).unwrap();
    shortest_path_matrix(&g.to_graph()).unwrap()
}

fn tree_reference(log: &mut RhoLog) -> Outcome {
    let start = Instant::now();
    let d = shortest_path_matrix(&tree_graph(2, 8).unwrap()).unwrap();
    let p = build_profile(&d, &config(1.0, 0)).unwrap();
    let elapsed = start.elapsed();
    log.profile(&p);
    let all_one = p.records.iter().all(|r| r.mean_rho == 1.0);
    outcome(
        all_one && !p.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{} scales, all mean_rho == 1: {all_one}, {:.2?}",
            p.records.len(),
            elapsed
        ),
    )
}

fn circle_reference(log: &mut RhoLog) -> Outcome {
    let d = circle_sample(500, 2).unwrap();
    let p = build_profile(&d, &config(0.1, 2)).unwrap();
    log.profile(&p);
    let checked: Vec<f64> = p
        .records
        .iter()
        .filter(|r| r.count >= 5)
        .map(|r| r.mean_rho)
        .collect();
    let worst = checked.iter().copied().fold(f64::INFINITY, f64::min);

    let mut angles = circle_angles(497, 3).unwrap();
    let third = std::f64::consts::TAU / 3.0;
    angles.extend([0.0, third, 2.0 * third]);
    let dm = circle_metric(&angles, 1.0).unwrap();
    let eq = rho_general(&dm, [497, 498, 499]).unwrap().rho;
    log.0.push(eq);
    outcome(
        !checked.is_empty() && worst >= 1.9 && eq == 2.0,
        format!(
            "{} scales with >= 5 triangles, lowest mean {worst:.4}; equidistant triple rho = {eq}",
            checked.len()
        ),
    )
}

fn plane_reference(log: &mut RhoLog) -> Outcome {
    let d = graph_metric(&plane_sample(2000, 4).unwrap(), 15, 20);
    let p = build_profile(&d, &config(0.1, 4)).unwrap();
    log.profile(&p);
    let max_r = p.max_r().unwrap_or(0.0);
    let mid: Vec<f64> = p
        .observations()
        .filter(|&(r, _)| r >= 0.2 * max_r && r <= 0.6 * max_r)
        .map(|o| o.1)
        .collect();
    let mean = mid.iter().sum::<f64>() / mid.len() as f64;
    outcome(
        !mid.is_empty() && (1.05..=1.25).contains(&mean),
        format!("{} mid-range triangles, mean rho {mean:.4}", mid.len()),
    )
}

fn connected_er_graphs(count: usize) -> Vec<DistanceMatrix> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let n = 10 + (seed % 51) as usize;
        let avg = 3.0 + (seed % 4) as f64;
        let d = shortest_path_matrix(&erdos_renyi(n, avg, seed).unwrap()).unwrap();
        if d.is_connected() {
            out.push(d);
        }
        seed += 1;
    }
    out
}

fn oracle_equivalence(log: &mut RhoLog) -> Outcome {
    let mut triples = 0;
    let mut mismatches = 0;
    for d in connected_er_graphs(100) {
        for side in 1..=d.diameter() as usize {
            for t in all_equilateral_triples(&d, side as f64) {
                let a = rho_minmax(&d, &t);
                let b = rho_ball_growth(&d, &t, GrowthStep::Ladder).unwrap();
                log.0.extend([a.rho, b.rho]);
                triples += 1;
                if a.rho != b.rho {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && triples > 0,
        format!("{triples} triples, {mismatches} mismatches"),
    )
}

fn weighted_graph(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let base = erdos_renyi(80, 5.0, rng.random()).unwrap();
        let g = Graph::from_edges(
            80,
            base.edges()
                .iter()
                .map(|&(u, v, _)| (u, v, rng.random_range(0.5..3.0))),
        )
        .unwrap();
        if shortest_path_matrix(&g).unwrap().is_connected() {
            return g;
        }
    }
}

fn scale_invariance(log: &mut RhoLog) -> Outcome {
    let factor = 7.3;
    let mut worst_rho = 0.0f64;
    let mut worst_r = 0.0f64;
    let mut shape_ok = true;
    let mut compared = 0;
    for seed in 0..3 {
        let g = weighted_graph(seed);
        let a = build_profile(&shortest_path_matrix(&g).unwrap(), &config(1.0, seed)).unwrap();
        let scaled = shortest_path_matrix(&g.scaled(factor).unwrap()).unwrap();
        let b = build_profile(&scaled, &config(1.0, seed)).unwrap();
        log.profile(&a);
        log.profile(&b);
        if a.records.len() != b.records.len() {
            shape_ok = false;
            continue;
        }
        for (x, y) in a.records.iter().zip(&b.records) {
            if x.rho_values.len() != y.rho_values.len() {
                shape_ok = false;
                continue;
            }
            worst_r = worst_r.max((y.r - factor * x.r).abs() / (factor * x.r));
            for (p, q) in x.rho_values.iter().zip(&y.rho_values) {
                worst_rho = worst_rho.max((p - q).abs());
                compared += 1;
            }
        }
    }
    outcome(
        shape_ok && compared > 0 && worst_rho <= 1e-12 && worst_r <= 1e-12,
        format!(
            "{compared} rho values, max |drho| = {worst_rho:.1e}, max relative r error = {worst_r:.1e}"
        ),
    )
}

fn lp_oracle(p: &ProfileDistribution, q: &ProfileDistribution) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = p
        .support
        .iter()
        .map(|&s| {
            q.support
                .iter()
                .map(|&t| lp.add_var(p.grid.ground_distance(s, t), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (i, row) in vars.iter().enumerate() {
        let terms: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, p.mass[i]);
    }
    for j in 0..q.support.len() {
        let terms: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, q.mass[j]);
    }
    lp.solve().unwrap().objective()
}

fn random_distribution(rng: &mut ChaCha8Rng, grid: GridSpec) -> ProfileDistribution {
    let size = rng.random_range(1..=20);
    let weights: Vec<(usize, f64)> = (0..size)
        .map(|_| {
            (
                rng.random_range(0..grid.node_count()),
                rng.random_range(0.01..1.0),
            )
        })
        .collect();
    ProfileDistribution::from_weights(grid, weights).unwrap()
}

fn w1_correctness() -> Outcome {
    let grid = GridSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut identity = true;
    let mut symmetric = true;
    for _ in 0..50 {
        let p = random_distribution(&mut rng, grid);
        let q = random_distribution(&mut rng, grid);
        let w = wasserstein1(&p, &q).unwrap();
        worst = worst.max((w - lp_oracle(&p, &q)).abs());
        symmetric &= w == wasserstein1(&q, &p).unwrap();
        identity &= wasserstein1(&p, &p).unwrap() == 0.0;
    }
    outcome(
        worst <= 1e-8 && identity && symmetric,
        format!("50 pairs, max |W1 - LP| = {worst:.1e}, identity {identity}, symmetry {symmetric}"),
    )
}

fn isometric_embedding() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let (x, y) = gaussian_isometric(500, n, 10 + n as u64).unwrap();
        assert_eq!(y.dim(), n + 50);
        for i in 0..500 {
            for j in (i + 1)..500 {
                worst = worst.max((x.distance(i, j) - y.distance(i, j)).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max pairwise distortion {worst:.1e}"),
    )
}

fn dimension_recovery(log: &mut RhoLog) -> Outcome {
    let (k_min, k_max) = (10, 15);
    let grid = GridSpec::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for n in 2..=4 {
        let start = Instant::now();
        let mut hits = 0;
        for seed in 0..5u64 {
            let (_, y) = gaussian_isometric(800, n, 100 * n as u64 + seed).unwrap();
            let original =
                build_profile(&graph_metric(&y, k_min, k_max), &config(0.1, seed)).unwrap();
            log.profile(&original);
            let mds = MdsDecomposition::new(&y.distance_matrix()).unwrap();
            let mut embedded = BTreeMap::new();
            for d in 1..=8 {
                let e = mds.embed(d).unwrap();
                let g = knn_graph(&e.points, k_min).unwrap().to_graph();
                let p =
                    build_profile(&shortest_path_matrix(&g).unwrap(), &config(0.1, seed)).unwrap();
                log.profile(&p);
                embedded.insert(d, p);
            }
            let est = estimate_dimension(&original, &embedded, &grid).unwrap();
            let hit = est.d_best == n || est.d_elbow == n;
            hits += usize::from(hit);
            let curve: Vec<String> = est
                .curve
                .iter()
                .map(|(d, w)| format!("{d}:{w:.4}"))
                .collect();
            println!(
                "      n={n} seed={seed} best={} elbow={} [{}]",
                est.d_best,
                est.d_elbow,
                curve.join(" ")
            );
        }
        let elapsed = start.elapsed();
        let ok = hits >= 4 && elapsed < Duration::from_secs(600);
        pass &= ok;
        lines.push(format!("n={n}: {hits}/5 in {:.1?}", elapsed));
    }
    outcome(pass, lines.join("; "))
}

fn network_profiles(log: &mut RhoLog) -> Outcome {
    let limit = Duration::from_secs(300);
    let mut ok = true;
    let mut ws_votes = 0;
    let mut slowest = Duration::ZERO;
    let mut fewest = usize::MAX;
    for seed in 0..5u64 {
        for (kind, g) in [
            ("er", erdos_renyi(1000, 4.0, seed).unwrap()),
            ("ws", watts_strogatz(1000, 4, 0.1, seed).unwrap()),
        ] {
            let start = Instant::now();
            let d = shortest_path_matrix(&g).unwrap();
            let p = build_profile(&d, &config(0.1, seed)).unwrap();
            let elapsed = start.elapsed();
            log.profile(&p);
            slowest = slowest.max(elapsed);
            fewest = fewest.min(p.records.len());
            ok &= elapsed < limit && p.records.len() >= 3;
            if kind == "ws" {
                let first = p.records.first().map_or(f64::NAN, |r| r.mean_rho);
                let last = p.records.last().map_or(f64::NAN, |r| r.mean_rho);
                ws_votes += usize::from(last <= first);
            }
        }
    }
    outcome(
        ok && ws_votes >= 3,
        format!(
            "slowest profile {slowest:.2?}, fewest scales {fewest}, WS large-scale <= small-scale in {ws_votes}/5 seeds"
        ),
    )
}

fn csv_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let d = graph_metric(&plane_sample(400, 11).unwrap(), 15, 20);
        let mut p = build_profile(&d, &config(0.1, 11)).unwrap();
        p.meta.config = Some(serde_json::json!({"seed": 11, "m": 0.1}));
        let mut out = Vec::new();
        write_long_csv(&p, &mut out).unwrap();
        write_summary_csv(&p, true, &mut out).unwrap();
        let er = shortest_path_matrix(&erdos_renyi(500, 4.0, 11).unwrap()).unwrap();
        let q = build_profile(&er, &config(0.1, 11)).unwrap();
        write_long_csv(&q, &mut out).unwrap();
        out
    })
}

fn determinism() -> Outcome {
    let one = csv_bytes(1);
    let eight = csv_bytes(8);
    let again = csv_bytes(8);
    outcome(
        one == eight && eight == again && !one.is_empty(),
        format!(
            "{} bytes; 1 vs 8 threads identical: {}",
            one.len(),
            one == eight
        ),
    )
}

fn main() {
    let mut log = RhoLog::default();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| outcome(false, "panicked"));
        println!(
            "[{}] {id:>2} {name}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        results.push((id, name, out));
    };
    println!("acceptance suite");
    run(1, "tree reference", &mut || tree_reference(&mut log));
    run(2, "circle reference", &mut || circle_reference(&mut log));
    run(3, "plane reference", &mut || plane_reference(&mut log));
    run(4, "ball growth equals min-max", &mut || {
        oracle_equivalence(&mut log)
    });
    run(6, "scale invariance", &mut || scale_invariance(&mut log));
    run(7, "W1 correctness", &mut w1_correctness);
    run(8, "isometric embedding", &mut isometric_embedding);
    run(9, "dimension recovery", &mut || {
        dimension_recovery(&mut log)
    });
    run(10, "network profiles", &mut || network_profiles(&mut log));
    run(11, "determinism", &mut determinism);
    let outside = log.0.iter().filter(|&&r| !rho_in_range(r)).count();
    run(5, "rho range", &mut || {
        outcome(
            outside == 0 && !log.0.is_empty(),
            format!("{} rho values, {outside} outside [1, 2]", log.0.len()),
        )
    });
    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.pass)
        .map(|r| format!("{} ({})", r.0, r.1))
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
