//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (visible with `cargo test -- --nocapture`).
//!
//! Everything here runs against the built-in corpus at the entries'
//! recommended resolutions; expected values come from the analytic oracles
//! documented on each corpus entry.

use lipgeo::analysis::{
    compare_center_links, estimate_lne_constant, estimate_llne, verify_equivalence_triple,
    verify_link_equivalence, AnalysisError, Verdict,
};
use lipgeo::corpus;
use lipgeo::embed::{distortion_bound, normal_embed};
use lipgeo::geom::{dist, norm, Point};
use lipgeo::metric::{
    build_graph_on, clamp_radius, pancake_shortest_paths, shortest_paths, GraphRule,
    McShaneExtension, MetricGraph, RadiusFunction,
};
use lipgeo::setdef::sample_set;
use lipgeo::transforms::{
    conjugate_by_inversion, invert, radius_normalize, seeded_bilipschitz_map, seeded_points,
    seeded_sphere_points, stereographic_project, stereographic_project_south, SampledMap,
};
use lipgeo::{Region, SetSpec};

const SEED: u64 = 7;

#[test]
fn criterion_01_exact_transform_identities() {
    let pts = seeded_points(3, 10_000, SEED);
    let mut worst_involution: f64 = 0.0;
    let mut worst_reciprocity: f64 = 0.0;
    for x in &pts {
        let ix = invert(x).unwrap();
        let back = invert(&ix).unwrap();
        worst_involution = worst_involution.max(dist(&back, x) / norm(x));
        worst_reciprocity = worst_reciprocity.max((norm(&ix) * norm(x) - 1.0).abs());
    }
    assert!(worst_involution <= 1e-12, "involution error {worst_involution}");
    assert!(worst_reciprocity <= 1e-12, "reciprocity error {worst_reciprocity}");

    let mut worst_conj: f64 = 0.0;
    for q in seeded_sphere_points(2, 1000, SEED + 1) {
        let rho = stereographic_project(&q).unwrap();
        let rho_hat = stereographic_project_south(&q).unwrap();
        let composed = invert(&rho_hat).unwrap();
        worst_conj = worst_conj.max(dist(&composed, &rho) / (1.0 + norm(&rho)));
    }
    assert!(worst_conj <= 1e-12, "projection conjugation error {worst_conj}");
    println!(
        "criterion 1: PASS — involution {worst_involution:.2e}, reciprocity \
         {worst_reciprocity:.2e}, south-pole conjugation {worst_conj:.2e} (all <= 1e-12)"
    );
}

fn floyd_warshall(graph: &MetricGraph) -> Vec<Vec<f64>> {
    let n = graph.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, row) in graph.adjacency.iter().enumerate() {
        for &(v, w) in row {
            if w < d[u][v] {
                d[u][v] = w;
                d[v][u] = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].is_infinite() {
                continue;
            }
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

#[test]
fn criterion_02_geodesic_engine() {
    // antipodal geodesic on the unit circle at the pinned resolution
    let spec = SetSpec::new(
        "circle",
        2,
        vec![SetSpec::implicit_piece(&["x1^2 + x2^2 - 1"], &[], 2).unwrap()],
        false,
    );
    let cloud = sample_set(&spec, &Region::ball(vec![0.0, 0.0], 2.0), 0.003, SEED).unwrap();
    let graph = build_graph_on(&cloud.points, GraphRule::EpsilonBall(0.009));
    let nearest = |target: &[f64]| -> usize {
        (0..graph.len())
            .min_by(|&a, &b| {
                dist(&graph.points[a], target)
                    .partial_cmp(&dist(&graph.points[b], target))
                    .unwrap()
            })
            .unwrap()
    };
    let a = nearest(&[1.0, 0.0]);
    let b = nearest(&[-1.0, 0.0]);
    let inner = shortest_paths(&graph, &[a])[b];
    let rel = (inner - std::f64::consts::PI).abs() / std::f64::consts::PI;
    assert!(rel <= 0.02, "antipodal inner distance {inner}, relative error {rel}");

    // exact agreement with the brute-force all-pairs oracle on every corpus
    // cloud subsampled to <= 300 nodes
    let mut worst_gap: f64 = 0.0;
    for entry in corpus::all() {
        let cloud = entry.sample(SEED).unwrap();
        let stride = cloud.len().div_ceil(300);
        let sub: Vec<Point> = cloud.points.iter().step_by(stride).cloned().collect();
        // edge rule from the subsample's own spacing so the graph is nontrivial
        let mut nn: Vec<f64> = sub
            .iter()
            .enumerate()
            .map(|(i, p)| {
                sub.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        nn.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eps = 4.0 * nn[nn.len() / 2];
        let g = build_graph_on(&sub, GraphRule::EpsilonBall(eps));
        let oracle = floyd_warshall(&g);
        for (s, oracle_row) in oracle.iter().enumerate() {
            let d = shortest_paths(&g, &[s]);
            for (j, (dj, oj)) in d.iter().zip(oracle_row).enumerate() {
                match (dj.is_finite(), oj.is_finite()) {
                    (true, true) => {
                        let gap = (dj - oj).abs();
                        worst_gap = worst_gap.max(gap);
                        assert!(gap <= 1e-9, "{}: pair ({s},{j}) gap {gap}", entry.name);
                    }
                    (a, b) => assert_eq!(a, b, "{}: reachability differs at ({s},{j})", entry.name),
                }
            }
        }
    }
    println!(
        "criterion 2: PASS — circle antipodal geodesic {inner:.5} (rel error {rel:.4} <= 0.02); \
         oracle agreement within {worst_gap:.2e} on all corpus subsamples"
    );
}

#[test]
fn criterion_03_pancake_sandwich_on_l_shape() {
    let entry = corpus::get("l-shape").unwrap();
    let cloud = entry.sample(SEED).unwrap();
    let graph = entry.graph(&cloud);
    let dec = entry.decomposition(&graph, &cloud).unwrap();
    dec.validate(&graph).unwrap();

    let n = graph.len();
    let mut measured_m: f64 = 1.0;
    let mut violations = 0usize;
    let mut pairs = 0u64;
    for i in 0..n {
        let din = shortest_paths(&graph, &[i]);
        let dp = pancake_shortest_paths(&graph.points, &dec, &[i]);
        for j in 0..n {
            if i == j {
                continue;
            }
            pairs += 1;
            if dp[j] > din[j] + 1e-12 {
                violations += 1;
            }
            if dp[j] > 0.0 {
                measured_m = measured_m.max(din[j] / dp[j]);
            }
        }
    }
    assert_eq!(violations, 0, "chain distance exceeded inner distance on {violations} pairs");
    // the measured constant stays within the pieces' claimed sqrt(2)
    assert!(
        measured_m <= 2f64.sqrt() * 1.05,
        "measured M {measured_m} exceeds sqrt(2) with 5% slack"
    );
    println!(
        "criterion 3: PASS — sandwich holds on 100% of {pairs} pairs; brute-force M = \
         {measured_m:.4} <= sqrt(2)"
    );
}

#[test]
fn criterion_04_embedding_constants() {
    let seg = corpus::get("segment").unwrap();
    let cloud = seg.sample(SEED).unwrap();
    let est = estimate_lne_constant(&seg.graph(&cloud)).unwrap();
    assert!((est.constant - 1.0).abs() <= 1e-6, "segment constant {}", est.constant);
    let seg_c = est.constant;

    let circle = corpus::get("circle").unwrap();
    let cloud = circle.sample(SEED).unwrap();
    let est = estimate_lne_constant(&circle.graph(&cloud)).unwrap();
    let target = std::f64::consts::FRAC_PI_2;
    let circle_rel = (est.constant - target).abs() / target;
    assert!(circle_rel <= 0.03, "circle constant {} (rel {})", est.constant, circle_rel);
    let circle_c = est.constant;

    let tp = corpus::get("tangent-pair").unwrap();
    let cloud = tp.sample(SEED).unwrap();
    assert!((cloud.density_target - 1e-3).abs() < 1e-15);
    let graph = tp.graph(&cloud);
    let est = estimate_lne_constant(&graph).unwrap();
    assert!(est.constant >= 10.0, "tangent-pair constant {}", est.constant);
    let (i, j) = est.witness_pair;
    let (wi, wj) = (norm(&graph.points[i]), norm(&graph.points[j]));
    assert!(wi <= 0.15 && wj <= 0.15, "witness norms {wi}, {wj}");
    println!(
        "criterion 4: PASS — segment {seg_c:.8}; circle {circle_c:.4} (pi/2 rel {circle_rel:.4}); \
         tangent-pair {:.2} >= 10 with witness at |x| = {wi:.3}",
        est.constant
    );
}

#[test]
fn criterion_05_link_equivalence_harness() {
    let mut drifts = Vec::new();
    for name in ["cone", "plane-annulus"] {
        let entry = corpus::get(name).unwrap();
        let cloud = entry.sample(SEED).unwrap();
        let grid = entry.t_grid.clone().unwrap();
        let rep =
            verify_link_equivalence(&entry.spec(), &cloud, &RadiusFunction::Norm, &grid).unwrap();
        for e in &rep.per_t {
            assert!(
                e.left_slack <= 1e-9,
                "{name}: left inequality violated at t = {} by {}",
                e.t,
                e.left_slack
            );
        }
        assert!(rep.drift <= 1.5, "{name}: drift {}", rep.drift);
        assert_eq!(rep.verdict, Verdict::Bounded, "{name}");
        if name == "plane-annulus" {
            // at large t the wrap-around-the-hole correction vanishes and
            // K approaches the circle-vs-chord ratio pi/2
            let last = rep.per_t.last().unwrap();
            let target = std::f64::consts::FRAC_PI_2;
            assert!(
                (target * 0.9..=target * 1.05).contains(&last.k),
                "plane K at t={} is {}",
                last.t,
                last.k
            );
        }
        drifts.push((name, rep.drift));
    }

    // the disconnected-link entry must abstain
    let rays = corpus::get("parallel-rays").unwrap();
    let cloud = rays.sample(SEED).unwrap();
    let grid = rays.t_grid.clone().unwrap();
    match verify_link_equivalence(&rays.spec(), &cloud, &RadiusFunction::Norm, &grid) {
        Err(AnalysisError::DisconnectedLink { t }) => {
            println!(
                "criterion 5: PASS — {} drift {:.4}, {} drift {:.4} (<= 1.5, left inequality \
                 exact); parallel-rays abstained with DisconnectedLink at t = {t}",
                drifts[0].0, drifts[0].1, drifts[1].0, drifts[1].1
            );
        }
        other => panic!("expected DisconnectedLink, got {other:?}"),
    }
}

#[test]
fn criterion_06_equivalence_triples() {
    let mut lines = Vec::new();
    for name in ["cone", "tangent-sheets-infinity", "plane-annulus", "parabola", "parallel-rays"] {
        let entry = corpus::get(name).unwrap();
        let cloud = entry.sample(SEED).unwrap();
        let grid = entry.t_grid.clone().unwrap();
        let rep = verify_equivalence_triple(&entry.spec(), &cloud, &grid).unwrap();
        assert!(rep.verdicts_agree, "{name}: verdicts {:?}", rep.verdicts);
        match name {
            "cone" => assert_eq!(rep.verdicts[0], Verdict::Bounded),
            "tangent-sheets-infinity" => {
                assert_eq!(rep.verdicts[0], Verdict::Diverging);
                let gap = rep.exponent_gap.unwrap();
                assert!(gap <= 0.2, "exponent gap {gap}");
                lines.push(format!("sheets exponent gap {gap:.3} <= 0.2"));
            }
            _ => {}
        }
        lines.push(format!("{name} {:?}", rep.verdicts[0]));
    }
    // bounded sets are vacuous at infinity
    let circle = corpus::get("circle").unwrap();
    let cloud = circle.sample(SEED).unwrap();
    let rep = verify_equivalence_triple(&circle.spec(), &cloud, &[1.0, 2.0]).unwrap();
    assert_eq!(rep.verdicts, [Verdict::NotApplicable; 3]);
    println!("criterion 6: PASS — {}; circle not-applicable", lines.join("; "));
}

#[test]
fn criterion_07_center_independence_on_the_cone() {
    let entry = corpus::get("cone").unwrap();
    let cloud = entry.sample(SEED).unwrap();
    let grid = entry.t_grid.clone().unwrap();
    let p = entry.center_p.clone().unwrap();
    let rep = compare_center_links(&entry.spec(), &cloud, &p, &grid).unwrap();
    assert_eq!(rep.at_origin.verdict, Verdict::Bounded);
    assert_eq!(rep.at_center.verdict, Verdict::Bounded);
    assert!(rep.max_factor <= 2.0, "factor {}", rep.max_factor);
    assert!(rep.consistent);
    println!(
        "criterion 7: PASS — cone links at 0 and at {p:?} both bounded; per-level constants \
         within factor {:.3} (<= 2)",
        rep.max_factor
    );
}

#[test]
fn criterion_08_constant_bounds() {
    // conjugation bound over 20 seeded bi-Lipschitz maps with measured C
    let mut worst_margin = f64::INFINITY;
    for seed in 0..20u64 {
        let map = seeded_bilipschitz_map(2, 200, 1000 + seed);
        let c = map.measured_bilipschitz();
        assert!((1.0..=3.0).contains(&c), "seed {seed}: measured C = {c}");
        let with_claim = SampledMap { claimed_c: Some(c), ..map };
        let out = conjugate_by_inversion(&with_claim).unwrap();
        let (lip, pair) = out.map.empirical_lipschitz();
        assert!(
            lip <= out.lipschitz_bound,
            "seed {seed}: conjugate Lipschitz {lip} > bound {} at {pair:?}",
            out.lipschitz_bound
        );
        worst_margin = worst_margin.min(out.lipschitz_bound / lip);
    }

    // radius normalization: Lip(psi) <= 3C for a sup-norm radius and a
    // tabulated (extended + clamped) radius
    let mut psi_ratios = Vec::new();
    {
        let c = 2f64.sqrt();
        let dom = seeded_points(2, 400, SEED + 2);
        let img: Vec<Point> = dom
            .iter()
            .map(|x| {
                let phi = clamp_radius(x.iter().fold(0.0f64, |a, v| a.max(v.abs())), norm(x), c);
                radius_normalize(x, phi, c).unwrap()
            })
            .collect();
        let (lip, _) = SampledMap::new(dom, img, None).unwrap().empirical_lipschitz();
        assert!(lip <= 3.0 * c, "sup-norm psi Lipschitz {lip} > {}", 3.0 * c);
        psi_ratios.push(lip / (3.0 * c));
    }
    {
        let c = 2.0;
        let table_pts = seeded_points(2, 60, SEED + 3);
        let table_vals: Vec<f64> = table_pts.iter().map(|p| norm(p)).collect();
        let ext = McShaneExtension::new(table_pts, table_vals, c).unwrap();
        let dom = seeded_points(2, 400, SEED + 4);
        let img: Vec<Point> = dom
            .iter()
            .map(|x| {
                let phi = clamp_radius(ext.eval(x), norm(x), c);
                radius_normalize(x, phi, c).unwrap()
            })
            .collect();
        let (lip, _) = SampledMap::new(dom, img, None).unwrap().empirical_lipschitz();
        assert!(lip <= 3.0 * c, "table psi Lipschitz {lip} > {}", 3.0 * c);
        psi_ratios.push(lip / (3.0 * c));
    }

    // McShane extensions of 20 seeded Lipschitz datasets stay C-Lipschitz on
    // a 1000-point grid
    let mut worst_mcshane_excess: f64 = 0.0;
    for seed in 0..20u64 {
        let dom = seeded_points(2, 50, 2000 + seed);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3000 + seed);
        let vals: Vec<f64> = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // ground-truth Lipschitz constant of the data
        let mut c = 0.0f64;
        for i in 0..dom.len() {
            for j in (i + 1)..dom.len() {
                let d = dist(&dom[i], &dom[j]);
                if d > 0.0 {
                    c = c.max((vals[i] - vals[j]).abs() / d);
                }
            }
        }
        let ext = McShaneExtension::new(dom, vals, c).unwrap();
        let grid = seeded_points(2, 1000, 4000 + seed);
        let gv: Vec<f64> = grid.iter().map(|q| ext.eval(q)).collect();
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                let d = dist(&grid[i], &grid[j]);
                if d > 0.0 {
                    let excess = (gv[i] - gv[j]).abs() / d - c;
                    worst_mcshane_excess = worst_mcshane_excess.max(excess);
                }
            }
        }
    }
    assert!(worst_mcshane_excess <= 1e-9, "McShane excess {worst_mcshane_excess}");
    println!(
        "criterion 8: PASS — 20 conjugates within 4C^3+C+2C^4 (tightest bound/Lip = \
         {worst_margin:.1}); psi within 3C (saturation {:.2}, {:.2}); 20 McShane extensions \
         C-Lipschitz on 1000-point grids (excess {worst_mcshane_excess:.1e})",
        psi_ratios[0], psi_ratios[1]
    );
}

#[test]
fn criterion_09_normal_embedding() {
    let slack = 0.1;
    let mut lines = Vec::new();
    for name in ["l-shape", "tangent-pair"] {
        let entry = corpus::get(name).unwrap();
        let cloud = entry.sample(SEED).unwrap();
        let graph = entry.graph(&cloud);
        let dec = entry.decomposition(&graph, &cloud).unwrap();
        let input = estimate_lne_constant(&graph).unwrap();
        let trace = normal_embed(&graph, &dec, slack).unwrap();
        for c in &trace.per_stage_claim_check {
            assert!(c.holds, "{name} stage {}: ratio {} > {}", c.stage, c.max_ratio, c.bound);
        }
        let bound = distortion_bound(trace.stages(), slack);
        assert!(
            trace.distortion <= bound,
            "{name}: distortion {} > {bound}",
            trace.distortion
        );
        if name == "tangent-pair" {
            assert!(input.constant > 10.0, "input constant {}", input.constant);
            assert!(
                trace.final_lne.constant <= 5.0,
                "final constant {}",
                trace.final_lne.constant
            );
        }
        lines.push(format!(
            "{name}: input {:.2} -> final {:.2}, distortion {:.3} <= {bound:.2}, claim ratios {:?}",
            input.constant,
            trace.final_lne.constant,
            trace.distortion,
            trace
                .per_stage_claim_check
                .iter()
                .map(|c| (c.max_ratio * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        ));
    }
    println!("criterion 9: PASS — {}", lines.join("; "));
}

fn seeded_rotation(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let q = qr.q();
    (0..dim).map(|i| (0..dim).map(|j| q[(i, j)]).collect()).collect()
}

fn rotate(points: &[Point], q: &[Vec<f64>]) -> Vec<Point> {
    points
        .iter()
        .map(|p| q.iter().map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect())
        .collect()
}

#[test]
fn criterion_10_determinism_and_invariance() {
    // determinism: identical inputs give bit-identical clouds and reports
    let sheets = corpus::get("tangent-sheets-infinity").unwrap();
    let grid = sheets.t_grid.clone().unwrap();
    let c1 = sheets.sample(SEED).unwrap();
    let c2 = sheets.sample(SEED).unwrap();
    assert_eq!(c1, c2, "sampling is not deterministic");
    let r1 = estimate_llne(&sheets.spec(), &c1, &RadiusFunction::Norm, &grid).unwrap();
    let r2 = estimate_llne(&sheets.spec(), &c2, &RadiusFunction::Norm, &grid).unwrap();
    let j1 = serde_json::to_string(&r1).unwrap();
    let j2 = serde_json::to_string(&r2).unwrap();
    assert_eq!(j1, j2, "analysis reports are not byte-identical");

    // isometry invariance: a seeded rotation changes no constant beyond 1e-9
    let mut worst_rot: f64 = 0.0;
    for name in ["circle", "tangent-pair"] {
        let entry = corpus::get(name).unwrap();
        let cloud = entry.sample(SEED).unwrap();
        let graph = entry.graph(&cloud);
        let base = estimate_lne_constant(&graph).unwrap().constant;
        let q = seeded_rotation(entry.ambient_dim, SEED + 5);
        let rotated = rotate(&cloud.points, &q);
        let rgraph = build_graph_on(&rotated, entry.rule);
        let got = estimate_lne_constant(&rgraph).unwrap().constant;
        let rel = (got - base).abs() / base;
        worst_rot = worst_rot.max(rel);
        assert!(rel <= 1e-9, "{name}: rotated constant {got} vs {base} (rel {rel})");
    }

    // scale equivariance: scaling the cloud and the grid by 4 changes nothing
    let entry = corpus::get("cone").unwrap();
    let cloud = entry.sample(SEED).unwrap();
    let base =
        verify_link_equivalence(&entry.spec(), &cloud, &RadiusFunction::Norm, &grid_of(&entry))
            .unwrap();
    let mut scaled = cloud.clone();
    for p in scaled.points.iter_mut() {
        for c in p.iter_mut() {
            *c *= 4.0;
        }
    }
    scaled.density_target *= 4.0;
    let scaled_grid: Vec<f64> = grid_of(&entry).iter().map(|t| 4.0 * t).collect();
    let scaled_rep =
        verify_link_equivalence(&entry.spec(), &scaled, &RadiusFunction::Norm, &scaled_grid)
            .unwrap();
    let mut worst_scale: f64 = 0.0;
    for (a, b) in base.per_t.iter().zip(&scaled_rep.per_t) {
        let rel = (a.k - b.k).abs() / a.k;
        worst_scale = worst_scale.max(rel);
        assert!(rel <= 1e-9, "K at t={} changed by {rel} under scaling", a.t);
    }

    // LNE constants under scaling are bitwise stable (powers of two)
    let tp = corpus::get("tangent-pair").unwrap();
    let cloud = tp.sample(SEED).unwrap();
    let base = estimate_lne_constant(&tp.graph(&cloud)).unwrap().constant;
    let scaled_pts: Vec<Point> =
        cloud.points.iter().map(|p| p.iter().map(|c| c * 4.0).collect()).collect();
    let sg = build_graph_on(&scaled_pts, GraphRule::EpsilonBall(4.0 * 2e-3));
    let scaled_c = estimate_lne_constant(&sg).unwrap().constant;
    let rel = (scaled_c - base).abs() / base;
    assert!(rel <= 1e-9, "scaled constant {scaled_c} vs {base}");

    println!(
        "criterion 10: PASS — byte-identical reports; rotation invariance within \
         {worst_rot:.2e}; scale equivariance within {worst_scale:.2e} (all <= 1e-9)"
    );
}

fn grid_of(entry: &corpus::CorpusEntry) -> Vec<f64> {
    entry.t_grid.clone().unwrap()
}
