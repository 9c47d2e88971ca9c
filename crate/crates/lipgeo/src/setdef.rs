//! Declarative set descriptions and tolerance-certified sampling.
//!
//! A [`SetSpec`] is a union of pieces: implicit polynomial systems, parametric
//! patches, or literal clouds. [`sample_set`] produces a [`SampleCloud`] whose
//! points satisfy the defining system to residual ≤ τ; [`sample_link`] extracts
//! a level set `{φ = t}` of a radius function, refining points onto the level
//! and inserting them into the parent cloud so slice graphs are subgraphs of
//! the set graph.
//!
//! Implicit pieces are sampled by grid seeding followed by a Gauss–Newton
//! least-norm projection onto the equality variety, with strict inequality
//! rejection. Parametric pieces push a parameter grid whose spacing is
//! calibrated to the map's measured stretch, so image spacing stays ≤ the
//! density target.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geom::{dist, lex_cmp, Point, Region};
use crate::metric::RadiusFunction;

/// Residual tolerance for projected points.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Default slice tolerance as a fraction of the density target.
pub fn default_slice_tol(density: f64) -> f64 {
    density / 2.0
}

const MAX_GRID_CELLS: u128 = 100_000_000;
const NEWTON_MAX_ITERS: usize = 60;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("no point of the set found in region")]
    EmptySample,
    #[error("projection failed to reach residual {tau:e} from any seed (worst residual {worst:e})")]
    NoConvergence { tau: f64, worst: f64 },
    #[error("no point within {tol} of level {t}")]
    EmptySlice { t: f64, tol: f64 },
    #[error("seed grid would have {cells} cells; shrink the region or coarsen the density")]
    GridTooLarge { cells: u128 },
    #[error("invalid set spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// One piece of a set; the set is the union of its pieces.
#[derive(Debug, Clone)]
pub enum PieceSpec {
    /// `{x : eq_i(x) = 0 for all i, ineq_j(x) >= 0 for all j}` in variables x1..xn.
    Implicit { equalities: Vec<Expr>, inequalities: Vec<Expr> },
    /// Image of a box under a map in variables u1..uk.
    Parametric { param_box: Vec<(f64, f64)>, map: Vec<Expr> },
    /// Finite list of points, taken as-is.
    CloudLiteral { points: Vec<Point> },
}

#[derive(Debug, Clone)]
pub struct SetSpec {
    pub name: String,
    pub ambient_dim: usize,
    pub pieces: Vec<PieceSpec>,
    /// Declared unboundedness; drives the stereographic pole and
    /// at-infinity analyses.
    pub unbounded: bool,
}

impl SetSpec {
    pub fn new(name: &str, ambient_dim: usize, pieces: Vec<PieceSpec>, unbounded: bool) -> Self {
        SetSpec { name: name.to_string(), ambient_dim, pieces, unbounded }
    }

    /// Implicit piece from polynomial strings in x1..xn.
    pub fn implicit_piece(
        equalities: &[&str],
        inequalities: &[&str],
        n: usize,
    ) -> Result<PieceSpec, ExprError> {
        Ok(PieceSpec::Implicit {
            equalities: equalities.iter().map(|s| Expr::parse_xs(s, n)).collect::<Result<_, _>>()?,
            inequalities: inequalities
                .iter()
                .map(|s| Expr::parse_xs(s, n))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Parametric piece from map strings in u1..uk over a box.
    pub fn parametric_piece(
        param_box: &[(f64, f64)],
        map: &[&str],
    ) -> Result<PieceSpec, ExprError> {
        let k = param_box.len();
        Ok(PieceSpec::Parametric {
            param_box: param_box.to_vec(),
            map: map.iter().map(|s| Expr::parse_us(s, k)).collect::<Result<_, _>>()?,
        })
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.ambient_dim == 0 {
            return Err(SampleError::InvalidSpec("ambient_dim must be >= 1".into()));
        }
        if self.pieces.is_empty() {
            return Err(SampleError::InvalidSpec("at least one piece required".into()));
        }
        for (i, piece) in self.pieces.iter().enumerate() {
            match piece {
                PieceSpec::Implicit { equalities, inequalities } => {
                    for e in equalities.iter().chain(inequalities) {
                        if let Some(v) = e.max_var() {
                            if v >= self.ambient_dim {
                                return Err(SampleError::InvalidSpec(format!(
                                    "piece {i}: expression references x{} beyond ambient_dim {}",
                                    v + 1,
                                    self.ambient_dim
                                )));
                            }
                        }
                    }
                }
                PieceSpec::Parametric { param_box, map } => {
                    if map.len() != self.ambient_dim {
                        return Err(SampleError::InvalidSpec(format!(
                            "piece {i}: map has {} components, ambient_dim is {}",
                            map.len(),
                            self.ambient_dim
                        )));
                    }
                    if param_box.is_empty() {
                        return Err(SampleError::InvalidSpec(format!("piece {i}: empty param box")));
                    }
                    for (lo, hi) in param_box {
                        if lo > hi || lo.is_nan() || hi.is_nan() {
                            return Err(SampleError::InvalidSpec(format!(
                                "piece {i}: param box interval [{lo}, {hi}] is inverted"
                            )));
                        }
                    }
                    for e in map {
                        if let Some(v) = e.max_var() {
                            if v >= param_box.len() {
                                return Err(SampleError::InvalidSpec(format!(
                                    "piece {i}: map references u{} beyond box dimension {}",
                                    v + 1,
                                    param_box.len()
                                )));
                            }
                        }
                    }
                }
                PieceSpec::CloudLiteral { points } => {
                    if points.iter().any(|p| p.len() != self.ambient_dim) {
                        return Err(SampleError::InvalidSpec(format!(
                            "piece {i}: literal point dimension mismatch"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Max absolute equality residual of `x` against piece `label`
    /// (0 for parametric and literal pieces).
    pub fn residual_of(&self, label: usize, x: &[f64]) -> f64 {
        match &self.pieces[label] {
            PieceSpec::Implicit { equalities, .. } => {
                equalities.iter().map(|e| e.eval(x).abs()).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }
}

/// A finite, tolerance-certified point sample of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub dim: usize,
    pub points: Vec<Point>,
    pub piece_label: Vec<usize>,
    pub residual: Vec<f64>,
    pub density_target: f64,
    pub seed: u64,
}

impl SampleCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn from_points(points: Vec<Point>, density_target: f64, seed: u64) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        let n = points.len();
        SampleCloud {
            dim,
            points,
            piece_label: vec![0; n],
            residual: vec![0.0; n],
            density_target,
            seed,
        }
    }

    pub fn push(&mut self, point: Point, label: usize, residual: f64) -> usize {
        self.points.push(point);
        self.piece_label.push(label);
        self.residual.push(residual);
        self.points.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadiusKind {
    EuclideanSphereAt(Point),
    GeneralRadiusFunction,
}

/// A sampled level set `{x : φ(x) = t}` referencing points of a parent cloud.
#[derive(Debug, Clone)]
pub struct LinkSlice {
    pub center: Point,
    pub t: f64,
    pub radius_kind: RadiusKind,
    /// Indices into the parent cloud.
    pub point_indices: Vec<usize>,
    /// `|φ(x) - t|` per slice point.
    pub level_residual: Vec<f64>,
}

impl LinkSlice {
    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

/// Samples `spec` inside `region` at inter-sample spacing `density`.
///
/// Deterministic: identical inputs produce bit-identical clouds regardless of
/// thread schedule (pieces are merged in lexicographic point order).
pub fn sample_set(
    spec: &SetSpec,
    region: &Region,
    density: f64,
    seed: u64,
) -> Result<SampleCloud, SampleError> {
    assert!(density > 0.0, "density must be positive");
    spec.validate()?;

    let mut merged: Vec<(Point, usize, f64)> = Vec::new();
    let mut worst_newton = f64::NAN;
    for (label, piece) in spec.pieces.iter().enumerate() {
        let batch = match piece {
            PieceSpec::Implicit { equalities, inequalities } => {
                match sample_implicit(equalities, inequalities, spec.ambient_dim, region, density) {
                    Ok(b) => b,
                    Err(SampleError::NoConvergence { worst, .. }) => {
                        worst_newton = if worst_newton.is_nan() { worst } else { worst_newton.max(worst) };
                        Vec::new()
                    }
                    Err(e) => return Err(e),
                }
            }
            PieceSpec::Parametric { param_box, map } => {
                sample_parametric(param_box, map, region, density)?
            }
            PieceSpec::CloudLiteral { points } => points
                .iter()
                .filter(|p| region.contains(p))
                .map(|p| (p.clone(), 0.0))
                .collect(),
        };
        merged.extend(batch.into_iter().map(|(p, r)| (p, label, r)));
    }

    if merged.is_empty() {
        return if worst_newton.is_nan() {
            Err(SampleError::EmptySample)
        } else {
            Err(SampleError::NoConvergence { tau: PROJECTION_TOL, worst: worst_newton })
        };
    }

    // Canonical order, then drop exact duplicates across pieces (shared
    // boundary points like a corner sampled by two legs).
    merged.sort_by(|a, b| lex_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    merged.dedup_by(|a, b| dist(&a.0, &b.0) <= 1e-12);

    let mut cloud = SampleCloud {
        dim: spec.ambient_dim,
        points: Vec::with_capacity(merged.len()),
        piece_label: Vec::with_capacity(merged.len()),
        residual: Vec::with_capacity(merged.len()),
        density_target: density,
        seed,
    };
    for (p, label, r) in merged {
        cloud.push(p, label, r);
    }
    Ok(cloud)
}

fn sample_implicit(
    equalities: &[Expr],
    inequalities: &[Expr],
    dim: usize,
    region: &Region,
    h: f64,
) -> Result<Vec<(Point, f64)>, SampleError> {
    let (lo, hi) = region.bounding_box();
    let counts: Vec<usize> = (0..dim).map(|i| ((hi[i] - lo[i]) / h).floor() as usize + 1).collect();
    let cells: u128 = counts.iter().map(|&c| c as u128).product();
    if cells > MAX_GRID_CELLS {
        return Err(SampleError::GridTooLarge { cells });
    }

    let grads: Vec<Vec<Expr>> = equalities.iter().map(|e| e.gradient(dim)).collect();

    // Seed only grid cells close to the variety: |g_i| small relative to the
    // local gradient scale.
    let mut seeds: Vec<Point> = Vec::new();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0f64; dim];
    'grid: loop {
        for d in 0..dim {
            x[d] = lo[d] + (idx[d] as f64 + 0.5) * h;
        }
        if region.contains(&x) {
            let near = equalities.iter().zip(&grads).all(|(e, g)| {
                let gx: f64 = g.iter().map(|c| c.eval(&x).powi(2)).sum::<f64>().sqrt();
                e.eval(&x).abs() <= 4.0 * h * (gx + 1.0)
            });
            if near {
                seeds.push(x.clone());
            }
        }
        // odometer
        #[allow(clippy::needless_range_loop)]
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < counts[d] {
                continue 'grid;
            }
            idx[d] = 0;
        }
        break;
    }

    if equalities.is_empty() {
        // Full-dimensional piece: the grid itself is the sample.
        let mut pts: Vec<(Point, f64)> = seeds
            .into_iter()
            .filter(|p| inequalities.iter().all(|q| q.eval(p) >= 0.0))
            .map(|p| (p, 0.0))
            .collect();
        pts.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        return Ok(pts);
    }

    if seeds.is_empty() {
        return Ok(Vec::new());
    }

    let projected: Vec<Option<(Point, f64)>> = seeds
        .par_iter()
        .map(|s| {
            let mut p = s.clone();
            let res = newton_least_norm(equalities, &grads, &mut p, PROJECTION_TOL, NEWTON_MAX_ITERS);
            if res <= PROJECTION_TOL
                && p.iter().all(|c| c.is_finite())
                && region.contains(&p)
                && inequalities.iter().all(|q| q.eval(&p) >= 0.0)
            {
                Some((p, res))
            } else {
                None
            }
        })
        .collect();

    let mut kept: Vec<(Point, f64)> = projected.into_iter().flatten().collect();
    if kept.is_empty() {
        // every seed failed to converge (or landed outside); report the best effort
        let worst = seeds
            .par_iter()
            .map(|s| {
                let mut p = s.clone();
                newton_least_norm(equalities, &grads, &mut p, PROJECTION_TOL, NEWTON_MAX_ITERS)
            })
            .reduce(|| f64::INFINITY, f64::min);
        return Err(SampleError::NoConvergence { tau: PROJECTION_TOL, worst });
    }

    kept.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    Ok(thin_to_net(kept, 0.8 * h))
}

/// Greedy net extraction in canonical order: keeps a point iff no kept point
/// lies within `r`. Output spacing lands in [r, 2r); r = 0.8h targets the
/// requested density.
fn thin_to_net(points: Vec<(Point, f64)>, r: f64) -> Vec<(Point, f64)> {
    if points.is_empty() {
        return points;
    }
    let dim = points[0].0.len();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|c| (c / r).floor() as i64).collect() };
    let mut grid: std::collections::HashMap<Vec<i64>, Vec<usize>> = std::collections::HashMap::new();
    let mut kept: Vec<(Point, f64)> = Vec::new();
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
    offsets.dedup();
    for (p, res) in points {
        let k = key(&p);
        let mut blocked = false;
        'nbr: for o in &offsets {
            let cell: Vec<i64> = k.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(members) = grid.get(&cell) {
                for &m in members {
                    if dist(&kept[m].0, &p) < r {
                        blocked = true;
                        break 'nbr;
                    }
                }
            }
        }
        if !blocked {
            grid.entry(k).or_default().push(kept.len());
            kept.push((p, res));
        }
    }
    kept
}

fn sample_parametric(
    param_box: &[(f64, f64)],
    map: &[Expr],
    region: &Region,
    h: f64,
) -> Result<Vec<(Point, f64)>, SampleError> {
    let k = param_box.len();
    let jac: Vec<Vec<Expr>> = map.iter().map(|e| e.gradient(k)).collect();

    // Per-axis stretch measured on a probe grid; spacing calibrated so image
    // steps stay <= h.
    let probes_per_axis = 17usize;
    let mut stretch = vec![0.0f64; k];
    let mut idx = vec![0usize; k];
    let mut u = vec![0.0f64; k];
    'probe: loop {
        for d in 0..k {
            let (lo, hi) = param_box[d];
            u[d] = lo + (hi - lo) * (idx[d] as f64) / ((probes_per_axis - 1) as f64);
        }
        for d in 0..k {
            let s: f64 = jac.iter().map(|row| row[d].eval(&u).powi(2)).sum::<f64>().sqrt();
            if s.is_finite() && s > stretch[d] {
                stretch[d] = s;
            }
        }
        #[allow(clippy::needless_range_loop)]
        for d in 0..k {
            idx[d] += 1;
            if idx[d] < probes_per_axis {
                continue 'probe;
            }
            idx[d] = 0;
        }
        break;
    }

    let counts: Vec<usize> = (0..k)
        .map(|d| {
            let (lo, hi) = param_box[d];
            let len = hi - lo;
            if len == 0.0 || stretch[d] <= 1e-12 {
                2
            } else {
                ((len * stretch[d] / h).ceil() as usize + 1).max(2)
            }
        })
        .collect();
    let cells: u128 = counts.iter().map(|&c| c as u128).product();
    if cells > MAX_GRID_CELLS {
        return Err(SampleError::GridTooLarge { cells });
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    'grid: loop {
        for d in 0..k {
            let (lo, hi) = param_box[d];
            u[d] = lo + (hi - lo) * (idx[d] as f64) / ((counts[d] - 1) as f64);
        }
        let p: Point = map.iter().map(|e| e.eval(&u)).collect();
        if p.iter().all(|c| c.is_finite()) && region.contains(&p) {
            out.push((p, 0.0));
        }
        #[allow(clippy::needless_range_loop)]
        for d in 0..k {
            idx[d] += 1;
            if idx[d] < counts[d] {
                continue 'grid;
            }
            idx[d] = 0;
        }
        break;
    }
    out.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    Ok(out)
}

/// Gauss–Newton least-norm projection onto `{funcs = 0}`. Mutates `x` in
/// place and returns the final max-abs residual.
fn newton_least_norm(
    funcs: &[Expr],
    grads: &[Vec<Expr>],
    x: &mut Point,
    tau: f64,
    max_iters: usize,
) -> f64 {
    let m = funcs.len();
    let n = x.len();
    let mut res = f64::INFINITY;
    for _ in 0..max_iters {
        let g: Vec<f64> = funcs.iter().map(|f| f.eval(x)).collect();
        res = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !res.is_finite() || res <= tau {
            return res;
        }
        let jac = DMatrix::from_fn(m, n, |i, j| grads[i][j].eval(x));
        let mut a = &jac * jac.transpose();
        let ridge = 1e-14 * a.trace().abs().max(1e-300);
        for i in 0..m {
            a[(i, i)] += ridge;
        }
        let rhs = DVector::from_vec(g);
        let y = match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => match a.lu().solve(&rhs) {
                Some(v) => v,
                None => return res,
            },
        };
        let dx = jac.transpose() * y;
        for j in 0..n {
            x[j] -= dx[j];
        }
    }
    funcs.iter().map(|f| f.eval(x).abs()).fold(res.min(f64::MAX), f64::max)
}

/// Extracts the level set `{φ = t}` from `cloud`: selects points with
/// `|φ(x) - t| <= slice_tol`, refines each onto the level (ambient Newton for
/// implicit pieces, parameter-space Newton for parametric pieces), and
/// appends the refined points to the parent cloud. The returned slice indexes
/// into the extended cloud, so any slice graph is a subgraph of the set graph.
pub fn sample_link(
    spec: &SetSpec,
    cloud: &mut SampleCloud,
    radius_fn: &RadiusFunction,
    t: f64,
    slice_tol: f64,
) -> Result<LinkSlice, SampleError> {
    assert!(t > 0.0, "level must be positive");
    assert!(slice_tol > 0.0, "slice_tol must be positive");

    // the level must sit inside the sampled radius range; a capture band
    // reaching past the range would "refine" phantom points onto levels the
    // cloud never saw
    let values: Vec<f64> = cloud.points.iter().map(|p| radius_fn.eval(p)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t < lo || t > hi {
        return Err(SampleError::EmptySlice { t, tol: slice_tol });
    }

    let candidates: Vec<usize> =
        (0..cloud.len()).filter(|&i| (values[i] - t).abs() <= slice_tol).collect();
    if candidates.is_empty() {
        return Err(SampleError::EmptySlice { t, tol: slice_tol });
    }

    let center = radius_fn.center(cloud.dim);
    let radius_kind = match radius_fn {
        RadiusFunction::Table(_) => RadiusKind::GeneralRadiusFunction,
        _ => RadiusKind::EuclideanSphereAt(center.clone()),
    };

    // (point, label, refined, set residual); candidates whose Newton
    // refinement fails are dropped rather than kept with a raw residual
    let mut slice_points: Vec<(Point, usize, bool, f64)> = Vec::new();
    for &ci in &candidates {
        let label = cloud.piece_label[ci];
        match (&spec.pieces[label], radius_fn) {
            (PieceSpec::Implicit { equalities, inequalities }, rf) if rf.is_sphere() => {
                if let Some(p) =
                    refine_implicit(equalities, inequalities, &cloud.points[ci], &center, t)
                {
                    let set_res = spec.residual_of(label, &p);
                    slice_points.push((p, label, true, set_res));
                }
            }
            (PieceSpec::Parametric { param_box, map }, rf) if rf.is_sphere() => {
                if let Some(p) = refine_parametric(param_box, map, &cloud.points[ci], &center, t)
                {
                    slice_points.push((p, label, true, 0.0));
                }
            }
            _ => slice_points.push((
                cloud.points[ci].clone(),
                label,
                false,
                cloud.residual[ci],
            )),
        }
    }

    let all_refined =
        !slice_points.is_empty() && slice_points.iter().all(|(_, _, refined, _)| *refined);
    slice_points.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    // Near-duplicate filter; consecutive dedup is not enough because distinct
    // symmetric points can interleave lexicographically between two copies.
    // When every slice point was refined onto the level, additionally thin to
    // a 0.5h net: refinement compresses the capture band onto the level
    // curve; the net restores ~h spacing while keeping 3x the p90 neighbor
    // gap at the parent's 3h resolution.
    let scale = if all_refined { 0.5 * cloud.density_target } else { 1e-9 * t.max(1.0) };
    let mut unique: Vec<(Point, usize, f64)> = Vec::with_capacity(slice_points.len());
    for (p, label, _, set_res) in slice_points {
        if unique.iter().all(|(q, _, _)| dist(q, &p) > scale) {
            unique.push((p, label, set_res));
        }
    }

    let mut point_indices = Vec::with_capacity(unique.len());
    let mut level_residual = Vec::with_capacity(unique.len());
    for (p, label, set_res) in unique {
        let lr = (radius_fn.eval(&p) - t).abs();
        if lr > slice_tol {
            continue; // refinement failed to land; the raw candidate was deduped away
        }
        // reuse an existing node when the refined point coincides with it
        let existing = (0..cloud.len()).rev().take(64).find(|&i| dist(&cloud.points[i], &p) <= 1e-12);
        let idx = match existing {
            Some(i) => i,
            None => cloud.push(p, label, set_res),
        };
        point_indices.push(idx);
        level_residual.push(lr);
    }

    if point_indices.is_empty() {
        return Err(SampleError::EmptySlice { t, tol: slice_tol });
    }

    Ok(LinkSlice { center, t, radius_kind, point_indices, level_residual })
}

fn sphere_level_expr(center: &[f64], t: f64, dim: usize) -> Expr {
    // sum (x_i - c_i)^2 - t^2
    let mut acc = Expr::Const(-t * t);
    for (i, c) in center.iter().enumerate().take(dim) {
        let diff = Expr::Sub(Box::new(Expr::Var(i)), Box::new(Expr::Const(*c)));
        acc = Expr::Add(Box::new(acc), Box::new(Expr::Pow(Box::new(diff), 2)));
    }
    acc
}

fn refine_implicit(
    equalities: &[Expr],
    inequalities: &[Expr],
    start: &[f64],
    center: &[f64],
    t: f64,
) -> Option<Point> {
    let dim = start.len();
    let mut system: Vec<Expr> = equalities.to_vec();
    system.push(sphere_level_expr(center, t, dim));
    let grads: Vec<Vec<Expr>> = system.iter().map(|e| e.gradient(dim)).collect();
    let mut p = start.to_vec();
    let res = newton_least_norm(&system, &grads, &mut p, PROJECTION_TOL * t.max(1.0), NEWTON_MAX_ITERS);
    if res <= PROJECTION_TOL * t.max(1.0)
        && p.iter().all(|c| c.is_finite())
        && inequalities.iter().all(|q| q.eval(&p) >= 0.0)
    {
        Some(p)
    } else {
        None
    }
}

fn refine_parametric(
    param_box: &[(f64, f64)],
    map: &[Expr],
    start: &[f64],
    center: &[f64],
    t: f64,
) -> Option<Point> {
    let k = param_box.len();
    // level equation pulled back to parameter space: ||F(u) - c||^2 = t^2
    let mut acc = Expr::Const(-t * t);
    for (fi, c) in map.iter().zip(center) {
        let diff = Expr::Sub(Box::new(fi.clone()), Box::new(Expr::Const(*c)));
        acc = Expr::Add(Box::new(acc), Box::new(Expr::Pow(Box::new(diff), 2)));
    }
    let system = [acc];
    let grads: Vec<Vec<Expr>> = system.iter().map(|e| e.gradient(k)).collect();

    // invert the start point approximately: nearest parameter on a local search
    let mut u = invert_start(param_box, map, start)?;
    let res = newton_least_norm(&system, &grads, &mut u, PROJECTION_TOL * t.max(1.0), NEWTON_MAX_ITERS);
    let inside = u
        .iter()
        .zip(param_box)
        .all(|(v, (lo, hi))| *v >= lo - 1e-9 && *v <= hi + 1e-9);
    if res <= PROJECTION_TOL * t.max(1.0) && inside {
        let p: Point = map.iter().map(|e| e.eval(&u)).collect();
        if p.iter().all(|c| c.is_finite()) {
            return Some(p);
        }
    }
    None
}

/// Coarse parameter recovery: minimizes ||F(u) - x|| by Gauss-Newton from the
/// box center scaled toward the best probe.
fn invert_start(param_box: &[(f64, f64)], map: &[Expr], x: &[f64]) -> Option<Point> {
    let k = param_box.len();
    let probes = 33usize;
    let mut best: Option<(f64, Point)> = None;
    let mut idx = vec![0usize; k];
    let mut u = vec![0.0f64; k];
    'probe: loop {
        for d in 0..k {
            let (lo, hi) = param_box[d];
            u[d] = lo + (hi - lo) * (idx[d] as f64) / ((probes - 1) as f64);
        }
        let p: Point = map.iter().map(|e| e.eval(&u)).collect();
        let d = dist(&p, x);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, u.clone()));
        }
        #[allow(clippy::needless_range_loop)]
        for d in 0..k {
            idx[d] += 1;
            if idx[d] < probes {
                continue 'probe;
            }
            idx[d] = 0;
        }
        break;
    }
    let (_, mut u) = best?;

    // polish with a few Gauss-Newton steps on F(u) = x
    let jac: Vec<Vec<Expr>> = map.iter().map(|e| e.gradient(k)).collect();
    for _ in 0..30 {
        let f: Vec<f64> = map.iter().map(|e| e.eval(&u)).collect();
        let r: Vec<f64> = f.iter().zip(x).map(|(a, b)| a - b).collect();
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
        let j = DMatrix::from_fn(map.len(), k, |i, d| jac[i][d].eval(&u));
        let jtj = j.transpose() * &j;
        let mut a = jtj;
        for d in 0..k {
            a[(d, d)] += 1e-12;
        }
        let rhs = j.transpose() * DVector::from_vec(r);
        match a.lu().solve(&rhs) {
            Some(du) => {
                for d in 0..k {
                    u[d] -= du[d];
                }
            }
            None => break,
        }
    }
    Some(u)
}
