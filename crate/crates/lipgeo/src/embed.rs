//! The iterative flattening construction: stage j+1 appends the pancake
//! distance to piece j+1's closure as a new coordinate,
//! `μ_{j+1}(x) = (x, h_{j+1}(x))`, reusing the original adjacency with
//! recomputed edge weights. After one pass over all pieces the lifted copy is
//! normally embedded while inner distances are preserved up to √2 per stage.
//!
//! Each stage carries the chain-distance bound
//! `d_P(x, y) <= 3 ||μ(x) - μ(y)||` for x in the flattened piece's closure; a
//! violation (beyond the configured slack) means the supplied decomposition's
//! pieces are not actually well-embedded at this resolution, and aborts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{estimate_lne_per_component, LipschitzEstimate, ALL_PAIRS_CUTOFF};
use crate::geom::{dist, farthest_point_indices, Point};
use crate::metric::{
    pancake_shortest_paths, shortest_paths, MetricError, MetricGraph, PancakeDecomposition,
};

/// Default discretization slack on the per-stage bound checks.
pub const DEFAULT_SLACK: f64 = 0.1;

/// The stage bound constant from the chain-distance argument.
pub const STAGE_CLAIM_CONSTANT: f64 = 3.0;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("stage {stage}: chain bound violated at pair {witness:?}: ratio {ratio} > {bound}")]
    ClaimViolated { stage: usize, witness: (usize, usize), ratio: f64, bound: f64 },
    #[error("graph must be connected (got {0} components)")]
    Disconnected(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Result of one stage's bound check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub stage: usize,
    pub max_ratio: f64,
    pub witness: (usize, usize),
    pub bound: f64,
    pub holds: bool,
}

/// Full record of the lifting tower.
#[derive(Debug, Clone)]
pub struct EmbeddingTrace {
    /// Coordinates per stage: stage 0 is the input, stage j lives in R^{n+j}.
    pub stage_points: Vec<Vec<Point>>,
    /// h_{j+1} values per stage (indexed by stage, then node).
    pub stage_functions: Vec<Vec<f64>>,
    pub per_stage_claim_check: Vec<ClaimCheck>,
    pub final_lne: LipschitzEstimate,
    pub distortion: f64,
    pub distortion_witness: (usize, usize),
    pub slack: f64,
}

impl EmbeddingTrace {
    pub fn stages(&self) -> usize {
        self.stage_functions.len()
    }
}

fn lift(points: &[Point], h: &[f64]) -> Vec<Point> {
    points
        .iter()
        .zip(h)
        .map(|(p, v)| {
            let mut q = p.clone();
            q.push(*v);
            q
        })
        .collect()
}

fn stage_claim_check(
    stage: usize,
    dec: &PancakeDecomposition,
    lifted: &[Point],
    current: &[Point],
    flattened: &[usize],
    slack: f64,
) -> ClaimCheck {
    let bound = STAGE_CLAIM_CONSTANT * (1.0 + slack);
    let (max_ratio, witness) = flattened
        .par_iter()
        .map(|&x| {
            let dp = pancake_shortest_paths(current, dec, &[x]);
            let mut best = (0.0f64, (x, x));
            for (y, d) in dp.iter().enumerate() {
                if y == x || !d.is_finite() {
                    continue;
                }
                let lifted_gap = dist(&lifted[x], &lifted[y]);
                if lifted_gap <= 0.0 {
                    continue;
                }
                let r = d / lifted_gap;
                if r > best.0 {
                    best = (r, (x, y));
                }
            }
            best
        })
        .reduce(
            || (0.0, (0, 0)),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    ClaimCheck { stage, max_ratio, witness, bound, holds: max_ratio <= bound }
}

/// Runs the tower over every piece of the decomposition and verifies the
/// per-stage bound and the final embedding constant.
pub fn normal_embed(
    graph: &MetricGraph,
    dec: &PancakeDecomposition,
    slack: f64,
) -> Result<EmbeddingTrace, EmbedError> {
    if !graph.is_connected() {
        return Err(EmbedError::Disconnected(graph.component_count));
    }
    dec.validate(graph).map_err(|e| EmbedError::InvalidDecomposition(e.to_string()))?;

    let k = dec.piece_count;
    let mut stage_points: Vec<Vec<Point>> = vec![graph.points.clone()];
    let mut stage_functions: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut checks: Vec<ClaimCheck> = Vec::with_capacity(k);

    for stage in 0..k {
        let current = stage_points.last().unwrap().clone();
        let flattened = dec.closure_nodes(stage);
        if flattened.is_empty() {
            return Err(EmbedError::InvalidDecomposition(format!("piece {stage} has no nodes")));
        }
        let raw = pancake_shortest_paths(&current, dec, &flattened);
        if raw.iter().any(|d| !d.is_finite()) {
            return Err(EmbedError::InvalidDecomposition(format!(
                "piece {stage} is not chain-reachable from every node"
            )));
        }
        let lifted = lift(&current, &raw);
        let check = stage_claim_check(stage, dec, &lifted, &current, &flattened, slack);
        if !check.holds {
            return Err(EmbedError::ClaimViolated {
                stage,
                witness: check.witness,
                ratio: check.max_ratio,
                bound: check.bound,
            });
        }
        checks.push(check);
        stage_functions.push(raw);
        stage_points.push(lifted);
    }

    let final_graph = graph.reweighted(stage_points.last().unwrap().clone());
    let final_lne = estimate_lne_per_component(&final_graph)
        .into_iter()
        .max_by(|a, b| a.constant.partial_cmp(&b.constant).unwrap())
        .expect("nonempty graph");

    let mut trace = EmbeddingTrace {
        stage_points,
        stage_functions,
        per_stage_claim_check: checks,
        final_lne,
        distortion: 1.0,
        distortion_witness: (0, 0),
        slack,
    };
    let (d, w) = embedding_distortion(graph, &trace);
    trace.distortion = d;
    trace.distortion_witness = w;
    Ok(trace)
}

/// Two-sided inner-distance distortion between the first and last stages:
/// `max over pairs of max(d_final/d_orig, d_orig/d_final)`, exact over all
/// pairs up to the usual cutoff, farthest-point seeded above.
pub fn embedding_distortion(graph: &MetricGraph, trace: &EmbeddingTrace) -> (f64, (usize, usize)) {
    let original = graph.reweighted(trace.stage_points[0].clone());
    let last = graph.reweighted(trace.stage_points.last().unwrap().clone());
    let sources: Vec<usize> = if graph.len() <= ALL_PAIRS_CUTOFF {
        (0..graph.len()).collect()
    } else {
        farthest_point_indices(&graph.points, crate::analysis::FPS_SEEDS)
    };
    sources
        .par_iter()
        .map(|&s| {
            let d0 = shortest_paths(&original, &[s]);
            let d1 = shortest_paths(&last, &[s]);
            let mut best = (1.0f64, (s, s));
            for j in 0..d0.len() {
                if j == s || !d0[j].is_finite() || !d1[j].is_finite() || d0[j] <= 0.0 || d1[j] <= 0.0
                {
                    continue;
                }
                let r = (d1[j] / d0[j]).max(d0[j] / d1[j]);
                if r > best.0 {
                    best = (r, (s.min(j), s.max(j)));
                }
            }
            best
        })
        .reduce(
            || (1.0, (0, 0)),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        )
}

/// 2^{k/2} (1 + slack): the distortion budget of a k-stage tower whose lifts
/// append per-edge 1-Lipschitz coordinates.
pub fn distortion_bound(stages: usize, slack: f64) -> f64 {
    2f64.powf(stages as f64 / 2.0) * (1.0 + slack)
}
