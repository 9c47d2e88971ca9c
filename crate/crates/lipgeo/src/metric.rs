//! Neighborhood graphs over sample clouds and the three distances computed on
//! them: outer (Euclidean), inner (graph geodesic), and the pancake chain
//! distance induced by a decomposition into well-embedded pieces. Also hosts
//! the McShane extension and the radius clamp used to turn tabulated radius
//! values into a globally Lipschitz radius function.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist, norm, Point};
use crate::setdef::SampleCloud;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("values are not {c}-Lipschitz: |f({i}) - f({j})| = {gap} > {c} * {d}")]
    NotCLipschitz { i: usize, j: usize, gap: f64, d: f64, c: f64 },
    #[error("domain and value lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("node index {0} out of range ({1} nodes)")]
    NodeOutOfRange(usize, usize),
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("decomposition invalid: {0}")]
    InvalidDecomposition(String),
    #[error("radius value {value} outside band [{lo}, {hi}] at node {node}")]
    RadiusOutOfBand { node: usize, value: f64, lo: f64, hi: f64 },
}

/// Edge rule for neighborhood graphs. The default for a cloud of density h is
/// `EpsilonBall(3h)`: wide enough to keep dense samples of smooth strata
/// connected, narrow enough that geodesics cannot tunnel across sheets more
/// than 3h apart. That ε is the resolution limit of every non-embeddedness
/// detection downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphRule {
    EpsilonBall(f64),
    KNearest(usize),
}

impl GraphRule {
    pub fn describe(&self) -> String {
        match self {
            GraphRule::EpsilonBall(e) => format!("eps={e}"),
            GraphRule::KNearest(k) => format!("knn={k}"),
        }
    }
}

/// Default ε for a cloud sampled at spacing `h`.
pub fn default_epsilon(h: f64) -> f64 {
    3.0 * h
}

/// Weighted neighborhood graph; the computational stand-in for the inner
/// metric of the sampled set.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    pub points: Vec<Point>,
    /// Symmetric adjacency; weights are the Euclidean distances of endpoints.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub rule: GraphRule,
    pub component_id: Vec<usize>,
    pub component_count: usize,
}

impl MetricGraph {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        self.component_count <= 1
    }

    /// Same adjacency, weights recomputed from new coordinates. Used by the
    /// embedding tower: a lift can only lengthen edges, never re-derive them.
    pub fn reweighted(&self, new_points: Vec<Point>) -> MetricGraph {
        assert_eq!(new_points.len(), self.points.len());
        let adjacency = self
            .adjacency
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .map(|&(j, _)| (j, dist(&new_points[i], &new_points[j])))
                    .collect()
            })
            .collect();
        MetricGraph {
            points: new_points,
            adjacency,
            rule: self.rule,
            component_id: self.component_id.clone(),
            component_count: self.component_count,
        }
    }

    /// Induced subgraph on `nodes`; edges are inherited, so every path in the
    /// subgraph is a path of the parent.
    pub fn induced(&self, nodes: &[usize]) -> (MetricGraph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.len()];
        for (li, &gi) in nodes.iter().enumerate() {
            local[gi] = li;
        }
        let points: Vec<Point> = nodes.iter().map(|&gi| self.points[gi].clone()).collect();
        let adjacency: Vec<Vec<(usize, f64)>> = nodes
            .iter()
            .map(|&gi| {
                self.adjacency[gi]
                    .iter()
                    .filter_map(|&(j, w)| {
                        (local[j] != usize::MAX).then_some((local[j], w))
                    })
                    .collect()
            })
            .collect();
        let (component_id, component_count) = label_components(&adjacency);
        (
            MetricGraph { points, adjacency, rule: self.rule, component_id, component_count },
            nodes.to_vec(),
        )
    }
}

/// Builds the neighborhood graph for a cloud under the given rule.
pub fn build_graph(cloud: &SampleCloud, rule: GraphRule) -> MetricGraph {
    build_graph_on(&cloud.points, rule)
}

/// Graph construction on a bare point list.
pub fn build_graph_on(points: &[Point], rule: GraphRule) -> MetricGraph {
    let n = points.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    match rule {
        GraphRule::EpsilonBall(eps) => {
            assert!(eps > 0.0);
            if n > 0 {
                let dim = points[0].len();
                let key = |p: &[f64]| -> Vec<i64> {
                    p.iter().map(|c| (c / eps).floor() as i64).collect()
                };
                let mut grid: std::collections::HashMap<Vec<i64>, Vec<usize>> =
                    std::collections::HashMap::new();
                for (i, p) in points.iter().enumerate() {
                    grid.entry(key(p)).or_default().push(i);
                }
                let mut offsets = vec![vec![0i64; dim]];
                for d in 0..dim {
                    let mut next = Vec::new();
                    for o in &offsets {
                        for s in [-1i64, 0, 1] {
                            let mut o2 = o.clone();
                            o2[d] = s;
                            next.push(o2);
                        }
                    }
                    offsets = next;
                }
                let edges: Vec<Vec<(usize, f64)>> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let k = key(&points[i]);
                        let mut out = Vec::new();
                        for o in &offsets {
                            let cell: Vec<i64> = k.iter().zip(o).map(|(a, b)| a + b).collect();
                            if let Some(members) = grid.get(&cell) {
                                for &j in members {
                                    if j != i {
                                        let w = dist(&points[i], &points[j]);
                                        if w <= eps {
                                            out.push((j, w));
                                        }
                                    }
                                }
                            }
                        }
                        out.sort_by_key(|e| e.0);
                        out
                    })
                    .collect();
                adjacency = edges;
            }
        }
        GraphRule::KNearest(k) => {
            assert!(k >= 1);
            let halves: Vec<Vec<(usize, f64)>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut ds: Vec<(usize, f64)> = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| (j, dist(&points[i], &points[j])))
                        .collect();
                    ds.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
                    ds.truncate(k);
                    ds
                })
                .collect();
            // symmetrize: union of directed k-NN edges
            let mut sets: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
            for (i, half) in halves.iter().enumerate() {
                for &(j, w) in half {
                    sets[i].insert(j, w);
                    sets[j].insert(i, w);
                }
            }
            adjacency = sets.into_iter().map(|m| m.into_iter().collect()).collect();
        }
    }
    let (component_id, component_count) = label_components(&adjacency);
    MetricGraph {
        points: points.to_vec(),
        adjacency,
        rule,
        component_id,
        component_count,
    }
}

fn label_components(adjacency: &[Vec<(usize, f64)>]) -> (Vec<usize>, usize) {
    let n = adjacency.len();
    let mut id = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut stack = Vec::new();
    for s in 0..n {
        if id[s] != usize::MAX {
            continue;
        }
        stack.push(s);
        id[s] = next;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if id[v] == usize::MAX {
                    id[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    (id, next)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we need the smallest distance
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over the graph edges; `f64::INFINITY` marks
/// unreachable nodes.
pub fn shortest_paths(graph: &MetricGraph, sources: &[usize]) -> Vec<f64> {
    let n = graph.len();
    let mut distv = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        distv[s] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: s });
    }
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if d > distv[u] {
            continue;
        }
        for &(v, w) in &graph.adjacency[u] {
            let nd = d + w;
            if nd < distv[v] {
                distv[v] = nd;
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    distv
}

/// Like [`shortest_paths`] but stops as soon as every node of `targets` is
/// settled; distances to non-target nodes may be left at infinity.
pub fn shortest_paths_to(graph: &MetricGraph, sources: &[usize], targets: &[usize]) -> Vec<f64> {
    let n = graph.len();
    let mut distv = vec![f64::INFINITY; n];
    let mut is_target = vec![false; n];
    let mut remaining = 0usize;
    for &t in targets {
        if !is_target[t] {
            is_target[t] = true;
            remaining += 1;
        }
    }
    let mut heap = BinaryHeap::new();
    for &s in sources {
        distv[s] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: s });
    }
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if d > distv[u] {
            continue;
        }
        if is_target[u] {
            is_target[u] = false;
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for &(v, w) in &graph.adjacency[u] {
            let nd = d + w;
            if nd < distv[v] {
                distv[v] = nd;
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    distv
}

/// Exact shortest-path (inner) distance between two nodes, or `None` when
/// they lie in different components — the graph analogue of an infinite
/// inner distance, kept as a distinguished value rather than an IEEE infinity.
pub fn inner_distance(graph: &MetricGraph, i: usize, j: usize) -> Result<Option<f64>, MetricError> {
    let n = graph.len();
    if i >= n {
        return Err(MetricError::NodeOutOfRange(i, n));
    }
    if j >= n {
        return Err(MetricError::NodeOutOfRange(j, n));
    }
    if graph.component_id[i] != graph.component_id[j] {
        return Ok(None);
    }
    let d = shortest_paths(graph, &[i])[j];
    Ok(if d.is_finite() { Some(d) } else { None })
}

/// A pancake decomposition at sampling resolution: per-node piece labels plus
/// per-node closure membership. A chain may hop between any two nodes sharing
/// a closure label.
#[derive(Debug, Clone)]
pub struct PancakeDecomposition {
    pub piece_of_node: Vec<usize>,
    /// Sorted label sets; a node may lie in several closures.
    pub closure_membership: Vec<Vec<usize>>,
    /// Claimed embedding constant of the pieces (>= 1).
    pub m: f64,
    pub piece_count: usize,
}

impl PancakeDecomposition {
    /// Builds closures at resolution: a node belongs to the closure of piece i
    /// iff it carries label i or has a graph edge into piece i. Every edge of
    /// the graph then joins nodes sharing a label, so every graph path is an
    /// admissible chain and the chain distance never exceeds the inner one.
    pub fn from_piece_labels(graph: &MetricGraph, piece_of_node: Vec<usize>, m: f64) -> Self {
        assert_eq!(piece_of_node.len(), graph.len());
        let piece_count = piece_of_node.iter().copied().max().map_or(0, |x| x + 1);
        let closure_membership = (0..graph.len())
            .map(|u| {
                let mut labels = vec![piece_of_node[u]];
                for &(v, _) in &graph.adjacency[u] {
                    labels.push(piece_of_node[v]);
                }
                labels.sort_unstable();
                labels.dedup();
                labels
            })
            .collect();
        PancakeDecomposition { piece_of_node, closure_membership, m, piece_count }
    }

    /// Nodes in the closure of piece `i`.
    pub fn closure_nodes(&self, i: usize) -> Vec<usize> {
        (0..self.closure_membership.len())
            .filter(|&u| self.closure_membership[u].binary_search(&i).is_ok())
            .collect()
    }

    pub fn validate(&self, graph: &MetricGraph) -> Result<(), MetricError> {
        if self.piece_of_node.len() != graph.len() || self.closure_membership.len() != graph.len() {
            return Err(MetricError::InvalidDecomposition(
                "label arrays do not match the graph".into(),
            ));
        }
        if self.m < 1.0 {
            return Err(MetricError::InvalidDecomposition("M must be >= 1".into()));
        }
        if self.closure_membership.iter().any(|l| l.is_empty()) {
            return Err(MetricError::InvalidDecomposition("a node carries no label".into()));
        }
        // sampled-level check: each closure induces a connected subgraph
        for i in 0..self.piece_count {
            let nodes = self.closure_nodes(i);
            if nodes.is_empty() {
                return Err(MetricError::InvalidDecomposition(format!("piece {i} has no nodes")));
            }
            let (sub, _) = graph.induced(&nodes);
            if !sub.is_connected() {
                return Err(MetricError::InvalidDecomposition(format!(
                    "closure of piece {i} is disconnected at sampling resolution"
                )));
            }
        }
        Ok(())
    }

    fn buckets(&self) -> Vec<Vec<usize>> {
        let mut buckets = vec![Vec::new(); self.piece_count];
        for (u, labels) in self.closure_membership.iter().enumerate() {
            for &l in labels {
                buckets[l].push(u);
            }
        }
        buckets
    }
}

/// Multi-source Dijkstra on the chain graph: hops join nodes sharing a
/// closure label, weighted by the Euclidean distance of the given coordinates
/// (which may be a lifted copy of the graph's points).
pub fn pancake_shortest_paths(
    points: &[Point],
    dec: &PancakeDecomposition,
    sources: &[usize],
) -> Vec<f64> {
    let n = points.len();
    let buckets = dec.buckets();
    let mut distv = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        distv[s] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: s });
    }
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &l in &dec.closure_membership[u] {
            for &v in &buckets[l] {
                if done[v] {
                    continue;
                }
                let nd = d + dist(&points[u], &points[v]);
                if nd < distv[v] {
                    distv[v] = nd;
                    heap.push(HeapEntry { dist: nd, node: v });
                }
            }
        }
    }
    distv
}

/// Pancake chain distance between two nodes: the infimum over chains whose
/// consecutive points share a piece closure of the summed hop lengths. On a
/// finite cloud the chain graph realizes that infimum exactly.
pub fn pancake_distance(
    graph: &MetricGraph,
    dec: &PancakeDecomposition,
    i: usize,
    j: usize,
) -> Result<Option<f64>, MetricError> {
    let n = graph.len();
    if i >= n {
        return Err(MetricError::NodeOutOfRange(i, n));
    }
    if j >= n {
        return Err(MetricError::NodeOutOfRange(j, n));
    }
    if dec.piece_of_node.len() != n {
        return Err(MetricError::InvalidDecomposition("decomposition does not match graph".into()));
    }
    let d = pancake_shortest_paths(&graph.points, dec, &[i])[j];
    Ok(if d.is_finite() { Some(d) } else { None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    Inner,
    Pancake,
}

/// Distance from every node to a nonempty node set, in the chosen metric.
/// Values are 0 exactly on the set; unreachable nodes get `None`.
pub fn distance_to_subset(
    graph: &MetricGraph,
    dec: &PancakeDecomposition,
    subset: &[usize],
    kind: MetricKind,
) -> Result<Vec<Option<f64>>, MetricError> {
    if subset.is_empty() {
        return Err(MetricError::EmptySubset);
    }
    for &s in subset {
        if s >= graph.len() {
            return Err(MetricError::NodeOutOfRange(s, graph.len()));
        }
    }
    let raw = match kind {
        MetricKind::Inner => shortest_paths(graph, subset),
        MetricKind::Pancake => pancake_shortest_paths(&graph.points, dec, subset),
    };
    Ok(raw.into_iter().map(|d| d.is_finite().then_some(d)).collect())
}

/// The McShane (infimal-convolution) extension of C-Lipschitz data:
/// `ext(y) = min_i (value_i + C * ||x_i - y||)`. Agrees with the data on its
/// domain and is C-Lipschitz on all of R^n.
#[derive(Debug, Clone)]
pub struct McShaneExtension {
    pub domain_points: Vec<Point>,
    pub values: Vec<f64>,
    pub c: f64,
}

impl McShaneExtension {
    /// Validates the Lipschitz precondition exhaustively over all pairs.
    pub fn new(domain_points: Vec<Point>, values: Vec<f64>, c: f64) -> Result<Self, MetricError> {
        if domain_points.len() != values.len() {
            return Err(MetricError::LengthMismatch(domain_points.len(), values.len()));
        }
        let n = domain_points.len();
        let witness = (0..n)
            .into_par_iter()
            .map(|i| {
                for j in (i + 1)..n {
                    let d = dist(&domain_points[i], &domain_points[j]);
                    let gap = (values[i] - values[j]).abs();
                    if gap > c * d + 1e-12 * (1.0 + gap) {
                        return Some((i, j, gap, d));
                    }
                }
                None
            })
            .find_map_any(|w| w);
        if let Some((i, j, gap, d)) = witness {
            return Err(MetricError::NotCLipschitz { i, j, gap, d, c });
        }
        Ok(McShaneExtension { domain_points, values, c })
    }

    /// Skips the pair check; the caller certifies the data is C-Lipschitz
    /// (e.g. values produced by a clamp of an extension with the same C).
    pub fn new_unchecked(domain_points: Vec<Point>, values: Vec<f64>, c: f64) -> Self {
        McShaneExtension { domain_points, values, c }
    }

    pub fn eval(&self, query: &[f64]) -> f64 {
        self.domain_points
            .iter()
            .zip(&self.values)
            .map(|(p, v)| v + self.c * dist(p, query))
            .fold(f64::INFINITY, f64::min)
    }
}

/// One-shot McShane extension per the operation contract: validates, then
/// evaluates at `query`.
pub fn mcshane_extend(
    domain_points: &[Point],
    values: &[f64],
    c: f64,
    query: &[f64],
) -> Result<f64, MetricError> {
    let ext = McShaneExtension::new(domain_points.to_vec(), values.to_vec(), c)?;
    Ok(ext.eval(query))
}

/// Clamps an extended radius value into the band `[norm/C, C*norm]`:
/// `min(max(norm/C, extended), C*norm)`.
pub fn clamp_radius(extended_value: f64, norm: f64, c: f64) -> f64 {
    debug_assert!(norm >= 0.0 && c >= 1.0);
    (extended_value.max(norm / c)).min(c * norm)
}

/// A radius function φ with `(1/C)||x|| <= φ(x) <= C||x||`.
#[derive(Debug, Clone)]
pub enum RadiusFunction {
    /// φ(x) = ||x||, C = 1.
    Norm,
    /// φ(x) = ||x - p||; comparable to the norm outside a ball around p.
    NormFrom(Point),
    /// Tabulated values extended by McShane and clamped into the band.
    Table(TableRadius),
}

#[derive(Debug, Clone)]
pub struct TableRadius {
    pub extension: McShaneExtension,
    pub c: f64,
}

impl RadiusFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RadiusFunction::Norm => norm(x),
            RadiusFunction::NormFrom(p) => dist(x, p),
            RadiusFunction::Table(t) => clamp_radius(t.extension.eval(x), norm(x), t.c),
        }
    }

    /// Equivalence constant C in the band inequality.
    pub fn c(&self) -> f64 {
        match self {
            RadiusFunction::Norm => 1.0,
            RadiusFunction::NormFrom(_) => 1.0, // asymptotically; check_band verifies per cloud
            RadiusFunction::Table(t) => t.c,
        }
    }

    pub fn is_sphere(&self) -> bool {
        !matches!(self, RadiusFunction::Table(_))
    }

    pub fn center(&self, dim: usize) -> Point {
        match self {
            RadiusFunction::NormFrom(p) => p.clone(),
            _ => vec![0.0; dim],
        }
    }

    /// Pointwise band check `(1/C)||x|| <= φ(x) <= C||x||` over a cloud.
    pub fn check_band(&self, cloud: &SampleCloud, c: f64) -> Result<(), MetricError> {
        for (i, p) in cloud.points.iter().enumerate() {
            let v = self.eval(p);
            let r = norm(p);
            let (lo, hi) = (r / c, c * r);
            if v < lo - 1e-12 || v > hi + 1e-12 {
                return Err(MetricError::RadiusOutOfBand { node: i, value: v, lo, hi });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Region;
    use crate::setdef::{sample_set, SetSpec};

    fn cloud_from(points: Vec<Point>, h: f64) -> SampleCloud {
        SampleCloud::from_points(points, h, 0)
    }

    #[test]
    fn three_collinear_points_make_a_triangle_of_edges() {
        let h = 0.1;
        let cloud = cloud_from(vec![vec![0.0], vec![h], vec![2.0 * h]], h);
        let g = build_graph(&cloud, GraphRule::EpsilonBall(3.0 * h));
        // 2h chord included
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_connected());
        // edge iff distance <= eps, weight = that distance, symmetric
        for (u, row) in g.adjacency.iter().enumerate() {
            for &(v, w) in row {
                assert_eq!(w, dist(&g.points[u], &g.points[v]));
                assert!(w <= 3.0 * h);
                assert!(g.adjacency[v].iter().any(|&(x, wx)| x == u && wx == w));
            }
        }
    }

    #[test]
    fn circle_sample_is_one_component() {
        let piece = SetSpec::implicit_piece(&["x1^2 + x2^2 - 1"], &[], 2).unwrap();
        let spec = SetSpec::new("circle", 2, vec![piece], false);
        let cloud = sample_set(&spec, &Region::ball(vec![0.0, 0.0], 2.0), 0.01, 7).unwrap();
        let g = build_graph(&cloud, GraphRule::EpsilonBall(0.03));
        assert_eq!(g.component_count, 1);
        // oracle: brute-force component count via union-find
        let n = g.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dist(&g.points[i], &g.points[j]) <= 0.03 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        assert_eq!(roots.len(), 1);
    }

    #[test]
    fn two_far_clusters_stay_separate() {
        let cloud = cloud_from(
            vec![vec![0.0, 0.0], vec![0.01, 0.0], vec![1.0, 0.0], vec![1.01, 0.0]],
            0.01,
        );
        let g = build_graph(&cloud, GraphRule::EpsilonBall(0.03));
        assert_eq!(g.component_count, 2);
        assert_eq!(inner_distance(&g, 0, 2).unwrap(), None);
    }

    #[test]
    fn straight_segment_inner_distance_is_euclidean() {
        let h = 0.002;
        let n = 501;
        let pts: Vec<Point> = (0..n).map(|i| vec![i as f64 * h, 0.0]).collect();
        let g = build_graph(&cloud_from(pts, h), GraphRule::EpsilonBall(3.0 * h));
        let d = inner_distance(&g, 0, n - 1).unwrap().unwrap();
        let euclid = (n - 1) as f64 * h;
        assert!((d - euclid).abs() / euclid <= 1e-3);
    }

    #[test]
    fn circle_antipodal_geodesic_approaches_pi() {
        let h = 0.003;
        let count = (2.0 * std::f64::consts::PI / h).round() as usize;
        let pts: Vec<Point> = (0..count)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * (i as f64) / (count as f64);
                vec![a.cos(), a.sin()]
            })
            .collect();
        let g = build_graph_on(&pts, GraphRule::EpsilonBall(3.0 * h));
        let d = inner_distance(&g, 0, count / 2).unwrap().unwrap();
        assert!((d - std::f64::consts::PI).abs() / std::f64::consts::PI <= 0.02, "d = {d}");
    }

    #[test]
    fn convex_piece_pancake_distance_is_one_hop() {
        let h = 0.05;
        let pts: Vec<Point> = (0..21).map(|i| vec![i as f64 * h, 0.0]).collect();
        let g = build_graph_on(&pts, GraphRule::EpsilonBall(3.0 * h));
        let dec = PancakeDecomposition::from_piece_labels(&g, vec![0; 21], 1.0);
        let d = pancake_distance(&g, &dec, 0, 20).unwrap().unwrap();
        assert!((d - 1.0).abs() <= 1e-12);
        assert_eq!(pancake_distance(&g, &dec, 5, 5).unwrap(), Some(0.0));
    }

    fn l_shape(h: f64) -> (MetricGraph, PancakeDecomposition) {
        let n = (1.0 / h).round() as usize;
        let mut pts: Vec<Point> = Vec::new();
        let mut labels = Vec::new();
        for i in 0..=n {
            pts.push(vec![i as f64 * h, 0.0]);
            labels.push(0usize);
        }
        for i in 1..=n {
            pts.push(vec![0.0, i as f64 * h]);
            labels.push(1usize);
        }
        let g = build_graph_on(&pts, GraphRule::EpsilonBall(3.0 * h));
        let dec = PancakeDecomposition::from_piece_labels(&g, labels, 2f64.sqrt());
        (g, dec)
    }

    #[test]
    fn l_shape_sandwich_holds_for_all_pairs() {
        let (g, dec) = l_shape(0.02);
        dec.validate(&g).unwrap();
        let n = g.len();
        let mut max_ratio: f64 = 1.0;
        for i in 0..n {
            let din = shortest_paths(&g, &[i]);
            let dp = pancake_shortest_paths(&g.points, &dec, &[i]);
            for j in 0..n {
                assert!(
                    dp[j] <= din[j] + 1e-12,
                    "pancake exceeded inner at ({i},{j}): {} > {}",
                    dp[j],
                    din[j]
                );
                if i != j {
                    max_ratio = max_ratio.max(din[j] / dp[j]);
                }
            }
        }
        // pieces are straight legs: inner never exceeds M * pancake with M = sqrt(2)
        assert!(max_ratio <= 2f64.sqrt() + 1e-9, "max ratio {max_ratio}");
    }

    #[test]
    fn distance_to_subset_basics() {
        let h = 0.01;
        let n = 101;
        let pts: Vec<Point> = (0..n).map(|i| vec![i as f64 * h]).collect();
        let g = build_graph_on(&pts, GraphRule::EpsilonBall(3.0 * h));
        let dec = PancakeDecomposition::from_piece_labels(&g, vec![0; n], 1.0);
        // whole set -> all zeros
        let all: Vec<usize> = (0..n).collect();
        let d = distance_to_subset(&g, &dec, &all, MetricKind::Inner).unwrap();
        assert!(d.iter().all(|v| *v == Some(0.0)));
        // single endpoint -> value approx coordinate, 1-Lipschitz along edges
        let d = distance_to_subset(&g, &dec, &[0], MetricKind::Inner).unwrap();
        for (i, v) in d.iter().enumerate() {
            let v = v.unwrap();
            assert!((v - i as f64 * h).abs() <= 1e-9);
        }
        for (u, row) in g.adjacency.iter().enumerate() {
            for &(v, w) in row {
                let gap = (d[u].unwrap() - d[v].unwrap()).abs();
                assert!(gap <= w + 1e-12);
            }
        }
        assert!(matches!(
            distance_to_subset(&g, &dec, &[], MetricKind::Inner),
            Err(MetricError::EmptySubset)
        ));
    }

    #[test]
    fn mcshane_agrees_on_domain_and_cones_off_single_points() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let vals = vec![0.5, 1.0];
        let c = 1.0;
        assert_eq!(mcshane_extend(&pts, &vals, c, &[0.0, 0.0]).unwrap(), 0.5);
        // single-point domain: a cone
        let got = mcshane_extend(&pts[..1], &vals[..1], 2.0, &[3.0, 4.0]).unwrap();
        assert!((got - (0.5 + 2.0 * 5.0)).abs() <= 1e-12);
    }

    #[test]
    fn mcshane_rejects_non_lipschitz_data() {
        let pts = vec![vec![0.0], vec![1.0]];
        let vals = vec![0.0, 5.0];
        match mcshane_extend(&pts, &vals, 1.0, &[0.5]) {
            Err(MetricError::NotCLipschitz { i, j, .. }) => {
                assert_eq!((i, j), (0, 1));
            }
            other => panic!("expected NotCLipschitz, got {other:?}"),
        }
    }

    #[test]
    fn mcshane_extension_is_c_lipschitz_on_a_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..50)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        // 1-Lipschitz data: distance to a fixed point
        let anchor = vec![0.3, -0.2];
        let vals: Vec<f64> = pts.iter().map(|p| dist(p, &anchor)).collect();
        let ext = McShaneExtension::new(pts, vals, 1.0).unwrap();
        let grid: Vec<Point> = (0..1000)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let gv: Vec<f64> = grid.iter().map(|q| ext.eval(q)).collect();
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                let d = dist(&grid[i], &grid[j]);
                assert!((gv[i] - gv[j]).abs() <= d + 1e-9);
            }
        }
    }

    #[test]
    fn clamp_radius_band() {
        assert_eq!(clamp_radius(1.0, 1.0, 2.0), 1.0); // in band: unchanged
        assert_eq!(clamp_radius(20.0, 1.0, 2.0), 2.0); // forced down to C*norm
        assert_eq!(clamp_radius(0.1, 1.0, 2.0), 0.5); // forced up to norm/C
        assert_eq!(clamp_radius(5.0, 0.0, 2.0), 0.0); // norm 0 -> 0
    }

    #[test]
    fn radius_band_is_checked_pointwise() {
        let cloud = cloud_from(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 0.0]], 0.1);
        RadiusFunction::Norm.check_band(&cloud, 1.0).unwrap();
        // spheres centered at p violate the band near p
        let shifted = RadiusFunction::NormFrom(vec![1.0, 0.0]);
        assert!(matches!(
            shifted.check_band(&cloud, 1.5),
            Err(MetricError::RadiusOutOfBand { node: 0, .. })
        ));
        // table radius built from clamped values stays in band by construction
        let ext = McShaneExtension::new(
            cloud.points.clone(),
            cloud.points.iter().map(|p| norm(p)).collect(),
            2.0,
        )
        .unwrap();
        let table = RadiusFunction::Table(TableRadius { extension: ext, c: 2.0 });
        table.check_band(&cloud, 2.0).unwrap();
    }

    #[test]
    fn knn_rule_connects_a_line() {
        let pts: Vec<Point> = (0..50).map(|i| vec![i as f64, 0.0]).collect();
        let g = build_graph_on(&pts, GraphRule::KNearest(2));
        assert!(g.is_connected());
        let d = inner_distance(&g, 0, 49).unwrap().unwrap();
        assert!((d - 49.0).abs() <= 1e-9);
    }
}
