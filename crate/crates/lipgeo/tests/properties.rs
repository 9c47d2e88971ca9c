//! Property tests for the metric and transform invariants: metric axioms on
//! random geometric graphs, the chain-vs-inner ordering, clamp bands,
//! inversion identities, McShane agreement, and container round-trips.

use proptest::prelude::*;

use lipgeo::geom::{dist, norm, Point};
use lipgeo::metric::{
    build_graph_on, clamp_radius, pancake_shortest_paths, shortest_paths, GraphRule,
    McShaneExtension, PancakeDecomposition,
};
use lipgeo::setdef::SampleCloud;

fn small_cloud() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(
        prop::collection::vec(-1.0f64..1.0, 2),
        8..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inner_distance_metric_axioms(points in small_cloud()) {
        let g = build_graph_on(&points, GraphRule::EpsilonBall(0.6));
        let n = g.len();
        let all: Vec<Vec<f64>> = (0..n).map(|i| shortest_paths(&g, &[i])).collect();
        for i in 0..n {
            // identity at graph level
            prop_assert_eq!(all[i][i], 0.0);
            for j in 0..n {
                if !all[i][j].is_finite() {
                    prop_assert!(!all[j][i].is_finite());
                    continue;
                }
                // symmetry (up to float accumulation order)
                prop_assert!((all[i][j] - all[j][i]).abs() <= 1e-12 * (1.0 + all[i][j]));
                // never below the straight-line distance
                prop_assert!(all[i][j] >= dist(&points[i], &points[j]) - 1e-12);
                // triangle inequality with the stated slack
                for k in 0..n {
                    if all[i][k].is_finite() && all[k][j].is_finite() {
                        prop_assert!(all[i][j] <= all[i][k] + all[k][j] + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn chain_distance_never_exceeds_inner(points in small_cloud(), split in 0.0f64..1.0) {
        let g = build_graph_on(&points, GraphRule::EpsilonBall(0.6));
        // arbitrary two-piece labeling; closures thickened by one edge
        let labels: Vec<usize> =
            points.iter().map(|p| usize::from(p[0] > 2.0 * split - 1.0)).collect();
        let dec = PancakeDecomposition::from_piece_labels(&g, labels, 2.0);
        for i in 0..g.len() {
            let din = shortest_paths(&g, &[i]);
            let dp = pancake_shortest_paths(&g.points, &dec, &[i]);
            for j in 0..g.len() {
                if din[j].is_finite() {
                    prop_assert!(
                        dp[j] <= din[j] + 1e-12,
                        "chain {} > inner {} at ({}, {})", dp[j], din[j], i, j
                    );
                }
            }
        }
    }

    #[test]
    fn clamp_stays_in_band(value in -100.0f64..100.0, n in 0.0f64..10.0, c in 1.0f64..5.0) {
        let out = clamp_radius(value, n, c);
        prop_assert!(out >= n / c - 1e-15);
        prop_assert!(out <= c * n + 1e-15);
        // idempotent
        prop_assert_eq!(clamp_radius(out, n, c), out);
    }

    #[test]
    fn inversion_identities(coords in prop::collection::vec(-10.0f64..10.0, 1..5)) {
        prop_assume!(norm(&coords) > 1e-6);
        let ix = lipgeo::transforms::invert(&coords).unwrap();
        let back = lipgeo::transforms::invert(&ix).unwrap();
        prop_assert!(dist(&back, &coords) <= 1e-12 * norm(&coords));
        prop_assert!((norm(&ix) * norm(&coords) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lift_lands_on_the_sphere(coords in prop::collection::vec(-20.0f64..20.0, 1..4)) {
        let q = lipgeo::transforms::stereographic_lift(&coords);
        prop_assert!((norm(&q) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mcshane_agrees_on_domain_and_is_c_lipschitz(
        points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 3..20),
        anchor in prop::collection::vec(-1.0f64..1.0, 2),
        queries in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 2..20),
    ) {
        // 1-Lipschitz data: distance to an anchor
        let values: Vec<f64> = points.iter().map(|p| dist(p, &anchor)).collect();
        let ext = McShaneExtension::new(points.clone(), values.clone(), 1.0).unwrap();
        for (p, v) in points.iter().zip(&values) {
            prop_assert!((ext.eval(p) - v).abs() <= 1e-12);
        }
        let evals: Vec<f64> = queries.iter().map(|q| ext.eval(q)).collect();
        for i in 0..queries.len() {
            for j in (i + 1)..queries.len() {
                prop_assert!(
                    (evals[i] - evals[j]).abs() <= dist(&queries[i], &queries[j]) + 1e-12
                );
            }
        }
    }

    #[test]
    fn cloud_containers_round_trip(
        points in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..30),
        labels in prop::collection::vec(0usize..4, 30),
        density in 0.001f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut cloud = SampleCloud {
            dim: 3,
            points: Vec::new(),
            piece_label: Vec::new(),
            residual: Vec::new(),
            density_target: density,
            seed,
        };
        for (i, p) in points.iter().enumerate() {
            cloud.push(p.clone(), labels[i % labels.len()], 0.0);
        }
        let mut bin = Vec::new();
        lipgeo::io::write_cloud_binary(&mut bin, &cloud).unwrap();
        prop_assert_eq!(&lipgeo::io::read_cloud_binary(&bin[..]).unwrap(), &cloud);
        let mut csv = Vec::new();
        lipgeo::io::write_cloud_csv(&mut csv, &cloud).unwrap();
        let back = lipgeo::io::read_cloud_csv(&csv[..], density, seed).unwrap();
        prop_assert_eq!(&back, &cloud);
    }

    #[test]
    fn slice_epsilon_scales_with_the_configuration(scale in 0.01f64..100.0) {
        // the adaptive slice rule is scale-equivariant, which is what keeps
        // transformed-model exponents aligned
        let base: Vec<Point> = (0..20).map(|i| vec![i as f64 * 0.1, 0.0]).collect();
        let scaled: Vec<Point> =
            base.iter().map(|p| p.iter().map(|c| c * scale).collect()).collect();
        let e0 = lipgeo::analysis::slice_epsilon(&base, 0.3);
        let e1 = lipgeo::analysis::slice_epsilon(&scaled, 0.3 * scale);
        prop_assert!((e1 / e0 - scale).abs() <= 1e-9 * scale);
    }
}
