//! Estimators and theorem harnesses: embedding constants on graphs, link
//! behavior across a radius grid, arc divergence, tangent cones at infinity,
//! the isosceles comparison, and the equivalence triple relating a set at
//! infinity to its inversion at 0 and its stereographic modification at the
//! pole.
//!
//! Every constant reported here is a supremum over sampled pairs at a stated
//! resolution, not a certified bound. Divergence verdicts come from a log-log
//! fit of per-level ratios: `diverging` needs a fitted exponent >= 0.2 with
//! r² >= 0.9, `bounded` needs max/min <= 1.5 over the grid, anything else is
//! `inconclusive`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist, farthest_point_indices, norm, Point};
use crate::metric::{
    build_graph_on, shortest_paths, shortest_paths_to, GraphRule, MetricError, MetricGraph,
    RadiusFunction,
};
use crate::setdef::{sample_link, SampleCloud, SampleError, SetSpec};
use crate::transforms::{invert, north_pole, stereographic_modify};

/// Divergence calibration: fitted exponent threshold and fit quality for a
/// `diverging` verdict, ratio spread for `bounded`.
pub const DIVERGING_ALPHA: f64 = 0.2;
pub const DIVERGING_R2: f64 = 0.9;
pub const BOUNDED_SPREAD: f64 = 1.5;

/// All-pairs cutoff for embedding-constant scans; larger graphs use
/// farthest-point seeding.
pub const ALL_PAIRS_CUTOFF: usize = 2000;
pub const FPS_SEEDS: usize = 512;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("graph is disconnected; per-component estimates attached")]
    DisconnectedInput { components: Vec<LipschitzEstimate> },
    #[error("no cloud point with norm in the requested band")]
    EmptyBand,
    #[error("link at t = {t} is disconnected at sampling resolution")]
    DisconnectedLink { t: f64 },
    #[error("arc point at t = {t} is {gap} away from the sampled set (limit {limit})")]
    ArcOffSet { t: f64, gap: f64, limit: f64 },
    #[error("arc radius misaligned at t = {t}: |phi - t| = {offset} > {limit}")]
    RadiusMisaligned { t: f64, offset: f64, limit: f64 },
    #[error("isosceles hypothesis fails: comparison constant {constant} > {limit}")]
    Inapplicable { constant: f64, limit: f64 },
    #[error("arc grids do not match")]
    GridMismatch,
    #[error("every slice on the grid was empty")]
    AllSlicesEmpty,
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Empirical embedding constant: the sampled supremum of inner/outer
/// distance ratios with its witness pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub constant: f64,
    pub witness_pair: (usize, usize),
    pub pairs_scanned: u64,
    pub resolution_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Bounded,
    Diverging,
    Inconclusive,
    NotApplicable,
}

/// Which end of the radius grid the asymptotics live at. Exponents are
/// reported so that `diverging` always means a positive exponent: ratios grow
/// like t^alpha at infinity and like t^{-alpha} at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitDirection {
    AtInfinity,
    AtZero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub t_grid: Vec<f64>,
    pub ratio_per_t: Vec<f64>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
    pub direction: FitDirection,
    /// Graph-level connectivity of each slice (heuristic at the sampling
    /// resolution; the theorems assume connected links).
    pub slice_connected: Vec<bool>,
    /// Grid values dropped because their slice was empty.
    pub dropped_t: Vec<f64>,
}

impl DivergenceReport {
    pub fn spread(&self) -> f64 {
        let max = self.ratio_per_t.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        let min = self.ratio_per_t.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

fn fit_report(
    kept: Vec<(f64, f64, bool)>,
    dropped: Vec<f64>,
    direction: FitDirection,
) -> DivergenceReport {
    let t_grid: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let ratio_per_t: Vec<f64> = kept.iter().map(|k| k.1).collect();
    let slice_connected: Vec<bool> = kept.iter().map(|k| k.2).collect();
    let (slope, r_squared) = log_log_fit(&t_grid, &ratio_per_t);
    let fitted_exponent = match direction {
        FitDirection::AtInfinity => slope,
        FitDirection::AtZero => -slope,
    };
    let mut report = DivergenceReport {
        t_grid,
        ratio_per_t,
        fitted_exponent,
        r_squared,
        verdict: Verdict::Inconclusive,
        direction,
        slice_connected,
        dropped_t: dropped,
    };
    report.verdict = if report.ratio_per_t.len() < 2 {
        Verdict::Inconclusive
    } else if report.spread() <= BOUNDED_SPREAD {
        Verdict::Bounded
    } else if fitted_exponent >= DIVERGING_ALPHA && r_squared >= DIVERGING_R2 {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    report
}

/// Least squares on (ln t, ln y); returns (slope, r²).
pub fn log_log_fit(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len();
    if n < 2 {
        return (0.0, 1.0);
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ls.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-30 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let syy: f64 = ls.iter().map(|y| (y - my) * (y - my)).sum();
    if syy <= 1e-30 {
        return (slope, 1.0);
    }
    let ss_res: f64 = xs
        .iter()
        .zip(&ls)
        .map(|(x, y)| {
            let pred = my + slope * (x - mx);
            (y - pred) * (y - pred)
        })
        .sum();
    (slope, 1.0 - ss_res / syy)
}

fn lne_scan(graph: &MetricGraph, sources: &[usize]) -> LipschitzEstimate {
    let results: Vec<(f64, (usize, usize), u64)> = sources
        .par_iter()
        .map(|&s| {
            let d = shortest_paths(graph, &[s]);
            let mut best = (1.0f64, (s, s));
            let mut scanned = 0u64;
            for (j, dj) in d.iter().enumerate() {
                if j == s || !dj.is_finite() {
                    continue;
                }
                let out = dist(&graph.points[s], &graph.points[j]);
                if out <= 0.0 {
                    continue;
                }
                scanned += 1;
                let r = dj / out;
                if r > best.0 {
                    best = (r, (s.min(j), s.max(j)));
                }
            }
            (best.0, best.1, scanned)
        })
        .collect();
    let mut constant = 1.0f64;
    let mut witness = (0usize, 0usize);
    let mut pairs_scanned = 0u64;
    for (c, w, n) in results {
        pairs_scanned += n;
        if c > constant || (c == constant && w < witness) {
            constant = c;
            witness = w;
        }
    }
    LipschitzEstimate {
        constant,
        witness_pair: witness,
        pairs_scanned,
        resolution_note: format!("rule={}, nodes={}", graph.rule.describe(), graph.len()),
    }
}

/// Per-component embedding estimates (components in label order).
pub fn estimate_lne_per_component(graph: &MetricGraph) -> Vec<LipschitzEstimate> {
    (0..graph.component_count)
        .map(|c| {
            let nodes: Vec<usize> =
                (0..graph.len()).filter(|&i| graph.component_id[i] == c).collect();
            let (sub, back) = graph.induced(&nodes);
            let mut est = estimate_on_connected(&sub);
            est.witness_pair = (back[est.witness_pair.0], back[est.witness_pair.1]);
            est
        })
        .collect()
}

fn estimate_on_connected(graph: &MetricGraph) -> LipschitzEstimate {
    if graph.len() <= ALL_PAIRS_CUTOFF {
        let all: Vec<usize> = (0..graph.len()).collect();
        lne_scan(graph, &all)
    } else {
        let seeds = farthest_point_indices(&graph.points, FPS_SEEDS);
        lne_scan(graph, &seeds)
    }
}

/// Empirical embedding constant of a connected graph: exact over all pairs up
/// to 2000 nodes, farthest-point seeded above. A disconnected graph is an
/// error carrying the per-component estimates.
pub fn estimate_lne_constant(graph: &MetricGraph) -> Result<LipschitzEstimate, AnalysisError> {
    if graph.component_count > 1 {
        return Err(AnalysisError::DisconnectedInput {
            components: estimate_lne_per_component(graph),
        });
    }
    Ok(estimate_on_connected(graph))
}

/// Edge rule for a slice's own graph: 3x the 90th-percentile nearest-neighbor
/// spacing of the slice points. Slices of transformed clouds (inverted,
/// lifted) have position-dependent density, so the rule adapts per slice;
/// on an untransformed cloud it reproduces the parent 3h.
pub fn slice_epsilon(points: &[Point], fallback: f64) -> f64 {
    if points.len() < 2 {
        return fallback;
    }
    let mut nn: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((nn.len() as f64) * 0.9).ceil() as usize - 1;
    let eps = 3.0 * nn[idx.min(nn.len() - 1)];
    if eps > 0.0 {
        eps
    } else {
        fallback
    }
}

fn slice_points_of(cloud: &SampleCloud, indices: &[usize]) -> Vec<Point> {
    indices.iter().map(|&i| cloud.points[i].clone()).collect()
}

/// Per-level behavior of the link: for each t, builds the slice's own graph
/// and takes its embedding constant (max over components when the slice is
/// disconnected at resolution, with the flag recorded), then fits the trend.
/// Returns the report and the working cloud enriched with the refined slice
/// points.
pub fn estimate_llne_over(
    spec: &SetSpec,
    cloud: &SampleCloud,
    radius_fn: &RadiusFunction,
    t_grid: &[f64],
    slice_tols: &[f64],
    direction: FitDirection,
) -> Result<(DivergenceReport, SampleCloud), AnalysisError> {
    assert_eq!(t_grid.len(), slice_tols.len());
    let mut work = cloud.clone();
    let mut slices = Vec::new();
    let mut dropped = Vec::new();
    for (&t, &tol) in t_grid.iter().zip(slice_tols) {
        match sample_link(spec, &mut work, radius_fn, t, tol) {
            Ok(s) => slices.push((t, s)),
            Err(SampleError::EmptySlice { .. }) => dropped.push(t),
            Err(e) => return Err(e.into()),
        }
    }
    if slices.is_empty() {
        return Err(AnalysisError::AllSlicesEmpty);
    }

    let fallback_eps = 3.0 * cloud.density_target;
    let kept: Vec<(f64, f64, bool)> = slices
        .par_iter()
        .map(|(t, slice)| {
            let pts = slice_points_of(&work, &slice.point_indices);
            let eps = slice_epsilon(&pts, fallback_eps);
            let graph = build_graph_on(&pts, GraphRule::EpsilonBall(eps));
            let connected = graph.is_connected();
            let constant = estimate_lne_per_component(&graph)
                .into_iter()
                .map(|e| e.constant)
                .fold(1.0f64, f64::max);
            (*t, constant, connected)
        })
        .collect();

    Ok((fit_report(kept, dropped, direction), work))
}

/// [`estimate_llne_over`] with the default capture band (2h wide; refinement
/// lands captured points on the level exactly, far inside the h/2 tolerance)
/// and the at-infinity fit direction.
pub fn estimate_llne(
    spec: &SetSpec,
    cloud: &SampleCloud,
    radius_fn: &RadiusFunction,
    t_grid: &[f64],
) -> Result<DivergenceReport, AnalysisError> {
    let tol = 2.0 * cloud.density_target;
    let tols = vec![tol; t_grid.len()];
    estimate_llne_over(spec, cloud, radius_fn, t_grid, &tols, FitDirection::AtInfinity)
        .map(|(r, _)| r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkEquivalenceEntry {
    pub t: f64,
    pub k: f64,
    pub slice_size: usize,
    /// Worst signed violation of d_set <= d_slice over all slice pairs
    /// (<= 0 means the left inequality held exactly).
    pub left_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkEquivalenceReport {
    pub per_t: Vec<LinkEquivalenceEntry>,
    pub dropped_t: Vec<f64>,
    pub drift: f64,
    pub verdict: Verdict,
}

/// Harness for the two-sided comparison of set-inner vs slice-inner
/// distances: slices are refined into the parent cloud, slice graphs are
/// induced subgraphs of the set graph (so the left inequality is structural),
/// and K(t) is the sampled supremum of d_slice/d_set. A slice that is
/// disconnected at resolution aborts with `DisconnectedLink` — the theorem's
/// hypothesis fails, so no verdict is issued.
///
/// Candidates are captured from a 2h-wide band around each level: refinement
/// lands them on the level exactly, and the wide capture keeps the refined
/// slice's gaps below the parent ε even where the sampling net straddles the
/// level.
pub fn verify_link_equivalence(
    spec: &SetSpec,
    cloud: &SampleCloud,
    radius_fn: &RadiusFunction,
    t_grid: &[f64],
) -> Result<LinkEquivalenceReport, AnalysisError> {
    let mut work = cloud.clone();
    let tol = 2.0 * cloud.density_target;
    let mut slices = Vec::new();
    let mut dropped = Vec::new();
    for &t in t_grid {
        match sample_link(spec, &mut work, radius_fn, t, tol) {
            Ok(s) => slices.push((t, s)),
            Err(SampleError::EmptySlice { .. }) => dropped.push(t),
            Err(e) => return Err(e.into()),
        }
    }
    if slices.is_empty() {
        return Err(AnalysisError::AllSlicesEmpty);
    }

    let parent = build_graph_on(
        &work.points,
        GraphRule::EpsilonBall(crate::metric::default_epsilon(work.density_target)),
    );

    let mut per_t = Vec::with_capacity(slices.len());
    for (t, slice) in &slices {
        let (sub, back) = parent.induced(&slice.point_indices);
        if !sub.is_connected() {
            return Err(AnalysisError::DisconnectedLink { t: *t });
        }
        let m = sub.len();
        let stats: Vec<(f64, f64)> = (0..m)
            .into_par_iter()
            .map(|li| {
                let d_slice = shortest_paths(&sub, &[li]);
                let d_set = shortest_paths_to(&parent, &[back[li]], &back);
                let mut k = 0.0f64;
                let mut slack = f64::NEG_INFINITY;
                for lj in 0..m {
                    if lj == li {
                        continue;
                    }
                    let ds = d_slice[lj];
                    let da = d_set[back[lj]];
                    if !ds.is_finite() || !da.is_finite() {
                        continue;
                    }
                    slack = slack.max(da - ds);
                    if da > 0.0 {
                        k = k.max(ds / da);
                    }
                }
                (k, slack)
            })
            .collect();
        let k = stats.iter().map(|s| s.0).fold(1.0f64, f64::max);
        let left_slack = stats.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        per_t.push(LinkEquivalenceEntry { t: *t, k, slice_size: m, left_slack });
    }

    let kmax = per_t.iter().map(|e| e.k).fold(f64::NEG_INFINITY, f64::max);
    let kmin = per_t.iter().map(|e| e.k).fold(f64::INFINITY, f64::min);
    let drift = if kmin > 0.0 { kmax / kmin } else { f64::INFINITY };
    let verdict = if per_t.len() >= 2 && drift <= BOUNDED_SPREAD {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(LinkEquivalenceReport { per_t, dropped_t: dropped, drift, verdict })
}

/// An arc sampled on a radius grid: `points[i]` is the arc's position at
/// `ts[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcSample {
    pub ts: Vec<f64>,
    pub points: Vec<Point>,
}

impl ArcSample {
    pub fn new(ts: Vec<f64>, points: Vec<Point>) -> Self {
        assert_eq!(ts.len(), points.len());
        ArcSample { ts, points }
    }

    fn same_grid(&self, other: &ArcSample) -> bool {
        self.ts.len() == other.ts.len()
            && self.ts.iter().zip(&other.ts).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

/// Fits the growth of d_inn/d_out along a pair of arcs on the set. Arc points
/// must lie on the sampled set (within `on_set_limit` of a graph node) and on
/// their radius levels (relative tolerance `radius_tol_rel`, i.e.
/// `|φ(γ(t)) - t| <= radius_tol_rel * t`); inner distances come from the
/// supplied graph via the snapped nodes, outer distances from the exact arc
/// points.
pub fn detect_arc_divergence(
    graph: &MetricGraph,
    radius_fn: &RadiusFunction,
    arc1: &ArcSample,
    arc2: &ArcSample,
    on_set_limit: f64,
    radius_tol_rel: f64,
    direction: FitDirection,
) -> Result<DivergenceReport, AnalysisError> {
    if !arc1.same_grid(arc2) {
        return Err(AnalysisError::GridMismatch);
    }
    let snap = |p: &Point, t: f64| -> Result<usize, AnalysisError> {
        let (best, gap) = graph
            .points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, dist(p, q)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("empty graph");
        if gap > on_set_limit {
            return Err(AnalysisError::ArcOffSet { t, gap, limit: on_set_limit });
        }
        Ok(best)
    };

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, &t) in arc1.ts.iter().enumerate() {
        let n1 = snap(&arc1.points[i], t)?;
        let n2 = snap(&arc2.points[i], t)?;
        for arc in [arc1, arc2] {
            let offset = (radius_fn.eval(&arc.points[i]) - t).abs();
            let limit = radius_tol_rel * t;
            if offset > limit {
                return Err(AnalysisError::RadiusMisaligned { t, offset, limit });
            }
        }
        let out = dist(&arc1.points[i], &arc2.points[i]);
        if out <= 0.0 {
            kept.push((t, 1.0, true));
            continue;
        }
        let inner = shortest_paths(graph, &[n1])[n2];
        if inner.is_finite() {
            kept.push((t, (inner / out).max(1.0), true));
        } else {
            dropped.push(t);
        }
    }
    if kept.is_empty() {
        return Err(AnalysisError::AllSlicesEmpty);
    }
    Ok(fit_report(kept, dropped, direction))
}

/// A cluster of normalized directions with its sample weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionCluster {
    pub direction: Point,
    pub weight: f64,
    pub count: usize,
}

/// Clusters the directions x/||x|| of cloud points whose norm lies in `band`,
/// with angular radius 3h/t_min — the angular resolution the sampling
/// supports at the inner edge of the band.
pub fn tangent_cone_at_infinity(
    cloud: &SampleCloud,
    band: (f64, f64),
) -> Result<Vec<DirectionCluster>, AnalysisError> {
    let (lo, hi) = band;
    let mut dirs: Vec<Point> = cloud
        .points
        .iter()
        .filter_map(|p| {
            let r = norm(p);
            (r >= lo && r <= hi).then(|| crate::geom::scale(p, 1.0 / r))
        })
        .collect();
    if dirs.is_empty() {
        return Err(AnalysisError::EmptyBand);
    }
    dirs.sort_by(|a, b| crate::geom::lex_cmp(a, b));
    let angular_radius = (3.0 * cloud.density_target / lo).min(std::f64::consts::PI);
    let cos_thresh = angular_radius.cos();

    struct Cluster {
        sum: Point,
        count: usize,
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for d in &dirs {
        let mut assigned = false;
        for cl in clusters.iter_mut() {
            let center = crate::geom::scale(&cl.sum, 1.0 / norm(&cl.sum).max(1e-300));
            if crate::geom::dot(&center, d) >= cos_thresh {
                cl.sum = crate::geom::add(&cl.sum, d);
                cl.count += 1;
                assigned = true;
                break;
            }
        }
        if !assigned {
            clusters.push(Cluster { sum: d.clone(), count: 1 });
        }
    }
    let total = dirs.len() as f64;
    let mut out: Vec<DirectionCluster> = clusters
        .into_iter()
        .map(|cl| {
            let n = norm(&cl.sum).max(1e-300);
            DirectionCluster {
                direction: crate::geom::scale(&cl.sum, 1.0 / n),
                weight: cl.count as f64 / total,
                count: cl.count,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.count.cmp(&a.count).then_with(|| crate::geom::lex_cmp(&a.direction, &b.direction))
    });
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoscelesReport {
    /// Measured comparison constant of the hypothesis chain.
    pub hypothesis_constant: f64,
    /// max over the grid of the ratio the conclusion bounds.
    pub conclusion_ratio: f64,
    pub bound: f64,
    pub holds: bool,
    /// Grid value attaining the conclusion ratio.
    pub witness_t: f64,
}

const ISOSCELES_HYPOTHESIS_LIMIT: f64 = 10.0;

/// Checks the isosceles comparison on three arcs: when
/// ||γ1-γ2|| ≲ ||γ1-γ3|| ≲ ||γ2-γ3|| holds with constant c on the grid, the
/// last two gaps must be comparable with constant (1+c), up to 5% sampling
/// slack. A false result signals an implementation or data error, not a
/// geometric discovery.
pub fn check_isosceles(arcs: &[ArcSample; 3]) -> Result<IsoscelesReport, AnalysisError> {
    if !arcs[0].same_grid(&arcs[1]) || !arcs[0].same_grid(&arcs[2]) {
        return Err(AnalysisError::GridMismatch);
    }
    let mut c_hyp = 0.0f64;
    let mut conclusion = 0.0f64;
    let mut witness_t = arcs[0].ts[0];
    for i in 0..arcs[0].ts.len() {
        let d12 = dist(&arcs[0].points[i], &arcs[1].points[i]);
        let d13 = dist(&arcs[0].points[i], &arcs[2].points[i]);
        let d23 = dist(&arcs[1].points[i], &arcs[2].points[i]);
        // hypothesis ratios; degenerate zero gaps only constrain when the
        // numerator is positive
        if d12 > 0.0 {
            if d13 <= 0.0 {
                return Err(AnalysisError::Inapplicable {
                    constant: f64::INFINITY,
                    limit: ISOSCELES_HYPOTHESIS_LIMIT,
                });
            }
            c_hyp = c_hyp.max(d12 / d13);
        }
        if d13 > 0.0 {
            if d23 <= 0.0 {
                return Err(AnalysisError::Inapplicable {
                    constant: f64::INFINITY,
                    limit: ISOSCELES_HYPOTHESIS_LIMIT,
                });
            }
            c_hyp = c_hyp.max(d13 / d23);
        }
        if d13 > 0.0 {
            let r = d23 / d13;
            if r > conclusion {
                conclusion = r;
                witness_t = arcs[0].ts[i];
            }
        }
    }
    if c_hyp > ISOSCELES_HYPOTHESIS_LIMIT {
        return Err(AnalysisError::Inapplicable {
            constant: c_hyp,
            limit: ISOSCELES_HYPOTHESIS_LIMIT,
        });
    }
    let bound = (1.0 + c_hyp) * 1.05;
    Ok(IsoscelesReport {
        hypothesis_constant: c_hyp,
        conclusion_ratio: conclusion,
        bound,
        holds: conclusion <= bound,
        witness_t,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterCompareReport {
    pub at_origin: DivergenceReport,
    pub at_center: DivergenceReport,
    pub verdicts_agree: bool,
    /// Max over common grid values of the two-sided constant ratio.
    pub max_factor: f64,
    pub consistent: bool,
}

/// Compares per-level constants for spheres centered at 0 against spheres
/// centered at `p`; grid values whose slice is empty on either side are
/// dropped from the factor comparison and reported in the respective report.
pub fn compare_center_links(
    spec: &SetSpec,
    cloud: &SampleCloud,
    p: &[f64],
    t_grid: &[f64],
) -> Result<CenterCompareReport, AnalysisError> {
    let at_origin = estimate_llne(spec, cloud, &RadiusFunction::Norm, t_grid)?;
    let at_center =
        estimate_llne(spec, cloud, &RadiusFunction::NormFrom(p.to_vec()), t_grid)?;
    let mut max_factor = 1.0f64;
    for (i, t) in at_origin.t_grid.iter().enumerate() {
        if let Some(j) = at_center.t_grid.iter().position(|s| (s - t).abs() <= 1e-9 * t) {
            let (a, b) = (at_origin.ratio_per_t[i], at_center.ratio_per_t[j]);
            if a > 0.0 && b > 0.0 {
                max_factor = max_factor.max((a / b).max(b / a));
            }
        }
    }
    let verdicts_agree = at_origin.verdict == at_center.verdict;
    let both_bounded =
        at_origin.verdict == Verdict::Bounded && at_center.verdict == Verdict::Bounded;
    let consistent = verdicts_agree && (!both_bounded || max_factor <= 2.0);
    Ok(CenterCompareReport { at_origin, at_center, verdicts_agree, max_factor, consistent })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceTripleReport {
    pub set_at_infinity: Option<DivergenceReport>,
    pub inversion_at_zero: Option<DivergenceReport>,
    pub modification_at_pole: Option<DivergenceReport>,
    pub verdicts: [Verdict; 3],
    pub verdicts_agree: bool,
    /// Max pairwise gap between fitted exponents, when all three diverge.
    pub exponent_gap: Option<f64>,
}

/// Runs the three-model comparison: the set's link trend at infinity, the
/// inverted set's trend at 0, and the stereographic modification's trend at
/// the pole. For a bounded set all three are NotApplicable. The radius grids
/// correspond under t ↦ 1/t and t ↦ dist-to-pole; slice tolerances scale with
/// the local similarity factor so each side sees the same refined slice
/// points.
pub fn verify_equivalence_triple(
    spec: &SetSpec,
    cloud: &SampleCloud,
    t_grid: &[f64],
) -> Result<EquivalenceTripleReport, AnalysisError> {
    if !spec.unbounded {
        return Ok(EquivalenceTripleReport {
            set_at_infinity: None,
            inversion_at_zero: None,
            modification_at_pole: None,
            verdicts: [Verdict::NotApplicable; 3],
            verdicts_agree: true,
            exponent_gap: None,
        });
    }

    let h = cloud.density_target;
    let tols = vec![2.0 * h; t_grid.len()];
    let (side_x, enriched) = estimate_llne_over(
        spec,
        cloud,
        &RadiusFunction::Norm,
        t_grid,
        &tols,
        FitDirection::AtInfinity,
    )?;

    // Inverted model: the enriched cloud (slice points included) mapped by
    // x -> x/||x||^2; the t-slices land exactly on the 1/t-levels.
    let diameter = enriched.points.iter().map(|p| norm(p)).fold(0.0f64, f64::max) * 2.0;
    let guard = 1e-6 * diameter.max(1e-12);
    let inv_points: Vec<Point> = enriched
        .points
        .iter()
        .filter(|p| norm(p) >= guard)
        .map(|p| invert(p).expect("guarded"))
        .collect();
    let inv_cloud = SampleCloud::from_points(inv_points, h, cloud.seed);
    let inv_spec = SetSpec::new(
        &format!("{}-inverted", spec.name),
        spec.ambient_dim,
        vec![crate::setdef::PieceSpec::CloudLiteral { points: inv_cloud.points.clone() }],
        false,
    );
    let mut s_grid: Vec<f64> = t_grid.iter().map(|t| 1.0 / t).collect();
    s_grid.reverse();
    let s_tols: Vec<f64> = s_grid.iter().map(|s| 1e-6 * s).collect();
    let (side_inv, _) = estimate_llne_over(
        &inv_spec,
        &inv_cloud,
        &RadiusFunction::Norm,
        &s_grid,
        &s_tols,
        FitDirection::AtZero,
    )?;

    // Stereographic modification: slices around the pole at
    // s'(t) = 2/sqrt(t^2+1) = dist(lift(x), pole) for ||x|| = t.
    let modified = stereographic_modify(&enriched, spec.unbounded);
    // the model is a single literal piece; piece labels reset accordingly
    let modified_cloud = SampleCloud::from_points(modified.cloud.points.clone(), h, cloud.seed);
    let mod_spec = SetSpec::new(
        &format!("{}-modified", spec.name),
        spec.ambient_dim + 1,
        vec![crate::setdef::PieceSpec::CloudLiteral { points: modified_cloud.points.clone() }],
        false,
    );
    let pole = north_pole(spec.ambient_dim);
    let mut m_grid: Vec<f64> = t_grid.iter().map(|t| 2.0 / (t * t + 1.0).sqrt()).collect();
    m_grid.reverse();
    let m_tols: Vec<f64> = m_grid.iter().map(|s| 1e-6 * s).collect();
    let (side_mod, _) = estimate_llne_over(
        &mod_spec,
        &modified_cloud,
        &RadiusFunction::NormFrom(pole),
        &m_grid,
        &m_tols,
        FitDirection::AtZero,
    )?;

    let verdicts = [side_x.verdict, side_inv.verdict, side_mod.verdict];
    let verdicts_agree = verdicts.iter().all(|v| *v == verdicts[0]);
    let exponent_gap = if verdicts.iter().all(|v| *v == Verdict::Diverging) {
        let es = [
            side_x.fitted_exponent,
            side_inv.fitted_exponent,
            side_mod.fitted_exponent,
        ];
        let mut gap = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                gap = gap.max((es[i] - es[j]).abs());
            }
        }
        Some(gap)
    } else {
        None
    };

    Ok(EquivalenceTripleReport {
        set_at_infinity: Some(side_x),
        inversion_at_zero: Some(side_inv),
        modification_at_pole: Some(side_mod),
        verdicts,
        verdicts_agree,
        exponent_gap,
    })
}

/// Log-spaced grid of `count` values over [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
