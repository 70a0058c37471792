use std::collections::BTreeSet;

use approx::assert_abs_diff_eq;
use curvprof::curvature::{
    all_equilateral_triples, build_profile, find_equilateral_triples, rho_ball_growth,
    rho_circle_closed_form, rho_general, rho_minmax, GrowthStep, ProfileConfig,
};
use curvprof::embedding::classical_mds;
use curvprof::generators::{circle_metric, erdos_renyi};
use curvprof::graph_build::{adaptive_graph, knn_graph, DensityDirection, PointCloud};
use curvprof::metric::{gromov_products, lambda_measure};
use curvprof::transport::{wasserstein1, GridSpec, ProfileDistribution};
use curvprof::{shortest_path_matrix, DistanceMatrix, Graph};
use proptest::prelude::*;

fn floyd_warshall(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in g.edges() {
        if w < d[u][v] {
            d[u][v] = w;
            d[v][u] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn weighted_graph() -> impl Strategy<Value = Graph> {
    (4usize..24).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0.1f64..5.0), n..3 * n)
            .prop_map(move |edges| Graph::from_edges(n, edges).unwrap())
    })
}

fn unit_graph() -> impl Strategy<Value = Graph> {
    (5usize..30, any::<u64>(), 2.0f64..5.0)
        .prop_map(|(n, seed, avg)| erdos_renyi(n, avg.min((n - 1) as f64), seed).unwrap())
}

/// Random tree: vertex `i > 0` hangs off an earlier vertex.
fn weighted_tree() -> impl Strategy<Value = Graph> {
    (4usize..30).prop_flat_map(|n| {
        prop::collection::vec((any::<prop::sample::Index>(), 0.2f64..4.0), n - 1).prop_map(
            move |links| {
                Graph::from_edges(
                    n,
                    links
                        .iter()
                        .enumerate()
                        .map(|(i, (p, w))| (i + 1, p.index(i + 1), *w)),
                )
                .unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shortest_paths_match_floyd_warshall(g in weighted_graph()) {
        let d = shortest_path_matrix(&g).unwrap();
        let fw = floyd_warshall(&g);
        for i in 0..g.n() {
            for j in 0..g.n() {
                if fw[i][j].is_finite() {
                    prop_assert!(!d.is_sentinel(i, j));
                    prop_assert!((d.get(i, j) - fw[i][j]).abs() <= 1e-9 * fw[i][j].max(1.0));
                } else {
                    prop_assert!(d.is_sentinel(i, j));
                    prop_assert_eq!(d.get(i, j), d.sentinel().unwrap());
                }
            }
        }
        prop_assert!(d.triangle_violations(1e-9).is_empty());
    }

    #[test]
    fn gromov_products_and_lambda(a in 0.1f64..10.0, b in 0.1f64..10.0, t in 0.0f64..1.0) {
        // third side anywhere in the triangle-inequality range
        let c = (a - b).abs() + t * (a + b - (a - b).abs());
        prop_assume!(c > 0.0);
        let g = gromov_products(a, b, c);
        prop_assert!(g.is_metric());
        prop_assert!((g.r1 + g.r2 - a).abs() < 1e-12);
        prop_assert!((g.r1 + g.r3 - b).abs() < 1e-12);
        prop_assert!((g.r2 + g.r3 - c).abs() < 1e-12);
        let l = lambda_measure(a, b, c).unwrap();
        prop_assert!(l.lambda >= 1.0 - 1e-12 && l.lambda <= 2.0 + 1e-12);
    }

    #[test]
    fn rho_in_range_and_ball_growth_agrees(g in unit_graph()) {
        let d = shortest_path_matrix(&g).unwrap();
        for side in 1..=(d.diameter() as usize) {
            for t in all_equilateral_triples(&d, side as f64) {
                let a = rho_minmax(&d, &t);
                let b = rho_ball_growth(&d, &t, GrowthStep::Ladder).unwrap();
                prop_assert!((1.0..=2.0).contains(&a.rho));
                prop_assert_eq!(a, b);
                let c = rho_ball_growth(&d, &t, GrowthStep::Fixed(0.5)).unwrap();
                prop_assert!(c.rho >= a.rho - 1e-12 && c.rho - a.rho <= 0.5 / t.r + 1e-12);
            }
        }
    }

    #[test]
    fn trees_are_hyperconvex(g in weighted_tree(), picks in prop::collection::vec(any::<[prop::sample::Index; 3]>(), 1..10)) {
        let d = shortest_path_matrix(&g).unwrap();
        let n = g.n();
        for p in picks {
            let v = [p[0].index(n), p[1].index(n), p[2].index(n)];
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                continue;
            }
            prop_assert_eq!(rho_general(&d, v).unwrap().rho, 1.0);
        }
    }

    #[test]
    fn sampled_triples_are_real(g in unit_graph(), m in 0.05f64..=1.0, seed in any::<u64>()) {
        let d = shortest_path_matrix(&g).unwrap();
        for side in 1..=(d.diameter() as usize) {
            let oracle: BTreeSet<[usize; 3]> =
                all_equilateral_triples(&d, side as f64).iter().map(|t| t.vertices).collect();
            let found = find_equilateral_triples(&d, side as f64, m, seed).unwrap();
            if m == 1.0 {
                prop_assert_eq!(found.is_empty(), oracle.is_empty());
            }
            let cap = (m * d.n() as f64).ceil() as usize;
            prop_assert!(found.len() <= cap.max(1));
            for t in found {
                prop_assert!(oracle.contains(&t.vertices));
            }
        }
    }

    #[test]
    fn profile_records_are_consistent(g in weighted_graph(), seed in any::<u64>()) {
        let d = shortest_path_matrix(&g).unwrap();
        let p = build_profile(&d, &ProfileConfig { sample_fraction: 0.5, seed, ..Default::default() }).unwrap();
        prop_assert!(p.records.windows(2).all(|w| w[0].r < w[1].r));
        for rec in &p.records {
            prop_assert_eq!(rec.count, rec.rho_values.len());
            prop_assert!(rec.count > 0);
            let mean = rec.rho_values.iter().sum::<f64>() / rec.count as f64;
            prop_assert!((mean - rec.mean_rho).abs() < 1e-15);
            prop_assert!(rec.rho_values.iter().all(|r| (1.0..=2.0).contains(r)));
        }
        let again = build_profile(&d, &ProfileConfig { sample_fraction: 0.5, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(p, again);
    }

    #[test]
    fn w1_is_a_metric(
        a in prop::collection::vec((0usize..64, 0.01f64..1.0), 1..12),
        b in prop::collection::vec((0usize..64, 0.01f64..1.0), 1..12),
        c in prop::collection::vec((0usize..64, 0.01f64..1.0), 1..12),
    ) {
        let grid = GridSpec { r_nodes: 8, rho_nodes: 8, ..Default::default() };
        let p = ProfileDistribution::from_weights(grid, a).unwrap();
        let q = ProfileDistribution::from_weights(grid, b).unwrap();
        let s = ProfileDistribution::from_weights(grid, c).unwrap();
        let pq = wasserstein1(&p, &q).unwrap();
        prop_assert_eq!(pq, wasserstein1(&q, &p).unwrap());
        prop_assert_eq!(wasserstein1(&p, &p).unwrap(), 0.0);
        prop_assert!(pq >= 0.0);
        if p != q {
            prop_assert!(pq > 0.0);
        }
        let ps = wasserstein1(&p, &s).unwrap();
        let sq = wasserstein1(&s, &q).unwrap();
        prop_assert!(pq <= ps + sq + 1e-8);
    }

    #[test]
    fn w1_on_a_line_matches_cdf_formula(
        a in prop::collection::vec((0usize..20, 0.01f64..1.0), 1..15),
        b in prop::collection::vec((0usize..20, 0.01f64..1.0), 1..15),
    ) {
        // all mass on the ρ axis at r = 0: W1 = Σ |F − G| Δρ
        let grid = GridSpec { r_nodes: 2, rho_nodes: 20, ..Default::default() };
        let p = ProfileDistribution::from_weights(grid, a).unwrap();
        let q = ProfileDistribution::from_weights(grid, b).unwrap();
        let mut dens = [[0.0f64; 20]; 2];
        for (k, d) in [&p, &q].into_iter().enumerate() {
            for (&s, &m) in d.support.iter().zip(&d.mass) {
                dens[k][s] += m;
            }
        }
        let (mut f, mut g, mut expected) = (0.0, 0.0, 0.0);
        for j in 0..19 {
            f += dens[0][j];
            g += dens[1][j];
            expected += (f - g).abs() / 19.0;
        }
        assert_abs_diff_eq!(wasserstein1(&p, &q).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn knn_matches_brute_force(
        coords in prop::collection::vec(-10.0f64..10.0, 20..60),
        k in 1usize..6,
    ) {
        let n = coords.len() / 2;
        let p = PointCloud::new(n, 2, coords[..2 * n].to_vec()).unwrap();
        prop_assume!(k < n);
        let g = knn_graph(&p, k).unwrap();
        let mut expected = BTreeSet::new();
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| p.distance(i, a).total_cmp(&p.distance(i, b)).then(a.cmp(&b)));
            for &j in &order[..k] {
                if p.distance(i, j) > 0.0 {
                    expected.insert((i.min(j), i.max(j)));
                }
            }
        }
        let got: BTreeSet<(usize, usize)> = g.edges().iter().map(|&(i, j, _)| (i, j)).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn adaptive_k_stays_in_bounds(
        coords in prop::collection::vec(-5.0f64..5.0, 40..120),
        k_min in 1usize..5,
        extra in 0usize..5,
    ) {
        let n = coords.len() / 2;
        let p = PointCloud::new(n, 2, coords[..2 * n].to_vec()).unwrap();
        let k_max = k_min + extra;
        prop_assume!(k_max < n);
        let g = adaptive_graph(&p, k_min, k_max, DensityDirection::Asc).unwrap();
        let dens = g.density().unwrap();
        prop_assert!(dens.k_per_point.iter().all(|&k| k >= k_min && k <= k_max));
        prop_assert!(dens.normalized.iter().all(|&s| (0.0..=1.0).contains(&s)));
        // the union keeps every point's own choices
        let degrees = g.degrees();
        prop_assert!(degrees.iter().zip(&dens.k_per_point).all(|(deg, k)| deg >= k));
    }

    #[test]
    fn mds_recovers_euclidean_points(coords in prop::collection::vec(-3.0f64..3.0, 24..60), dim in 1usize..4) {
        let n = coords.len() / dim;
        prop_assume!(n > dim + 1);
        let p = PointCloud::new(n, dim, coords[..n * dim].to_vec()).unwrap();
        let d = p.distance_matrix();
        let e = classical_mds(&d, dim).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((e.points.distance(i, j) - d.get(i, j)).abs() < 1e-8);
            }
        }
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn circle_rho_follows_closed_form() {
    // isosceles triples on a fine circle: the longest side sets ρ
    let n = 360;
    let angles: Vec<f64> = (0..n)
        .map(|i| i as f64 * std::f64::consts::TAU / n as f64)
        .collect();
    let d = circle_metric(&angles, 1.0).unwrap();
    for gap in [100usize, 110, 120, 130, 140] {
        // points 0, gap, 2·gap when they surround the center
        let third = 2 * gap;
        if n - third > gap || 2 * gap > n {
            continue;
        }
        let longest = (gap.max(n - third)) as f64 * std::f64::consts::TAU / n as f64;
        let expected = rho_circle_closed_form(longest).unwrap();
        let got = rho_general(&d, [0, gap, third]).unwrap().rho;
        assert!(
            (got - expected).abs() < 0.02,
            "gap {gap}: {got} vs {expected}"
        );
    }
}

#[test]
fn cycle_thirds_have_rho_two() {
    for n in [6usize, 9, 12, 30] {
        let g = Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, 1.0))).unwrap();
        let d = shortest_path_matrix(&g).unwrap();
        assert_eq!(rho_general(&d, [0, n / 3, 2 * n / 3]).unwrap().rho, 2.0);
    }
}

#[test]
fn disconnected_pairs_never_form_triples() {
    let g = Graph::from_edges(
        8,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 0, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (5, 3, 1.0),
            (6, 7, 1.0),
        ],
    )
    .unwrap();
    let d: DistanceMatrix = shortest_path_matrix(&g).unwrap();
    assert!(!d.is_connected());
    let sentinel = d.sentinel().unwrap();
    assert!(all_equilateral_triples(&d, sentinel).is_empty());
    let p = build_profile(
        &d,
        &ProfileConfig {
            sample_fraction: 1.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(p.records.iter().all(|r| r.r < sentinel / 2.0));
}
