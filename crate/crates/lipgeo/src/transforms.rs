//! The explicit maps of the toolkit: inversion `ι(x) = x/||x||²`, the two
//! stereographic projections `ρ(x,t) = x/(1-t)` (from the north pole) and
//! `ρ̂(x,t) = x/(1+t)` (from the south pole), the stereographic modification of
//! a cloud, radius normalization `ψ(x) = (φ(x)/||x||)·x`, and conjugation of a
//! sampled map by inversion. Each carries the exact identities it must satisfy
//! (`ι∘ι = id`, `ι∘ρ̂ = ρ`, `||ι(x)||·||x|| = 1`) as checkable postconditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{dist, norm, scale, Point};
use crate::setdef::SampleCloud;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("origin is not invertible (||x|| = {0:e})")]
    OriginNotInvertible(f64),
    #[error("point projects from the pole itself")]
    PoleNotProjectable,
    #[error("point is not on the sphere (| ||q|| - 1 | = {0:e})")]
    NotOnSphere(f64),
    #[error("cannot normalize the radius at the origin")]
    OriginNotNormalizable,
    #[error("radius value {value} outside [{lo}, {hi}]")]
    RadiusOutOfBand { value: f64, lo: f64, hi: f64 },
    #[error("claimed bi-Lipschitz constant {claimed} violated on pair ({i}, {j}): ratio {ratio}")]
    ClaimedConstantViolated { claimed: f64, i: usize, j: usize, ratio: f64 },
    #[error("domain and image lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("claimed constant required for conjugation")]
    MissingConstant,
}

const ORIGIN_GUARD: f64 = 1e-300;

/// `ι(x) = x / ||x||²`. Involution; swaps neighborhoods of 0 and infinity.
pub fn invert(x: &[f64]) -> Result<Point, TransformError> {
    let r = norm(x);
    if r < ORIGIN_GUARD {
        return Err(TransformError::OriginNotInvertible(r));
    }
    let s = 1.0 / (r * r);
    Ok(scale(x, s))
}

const SPHERE_TOL: f64 = 1e-9;
const POLE_TOL: f64 = 1e-12;

/// Stereographic projection from the north pole: `ρ(x, t) = x / (1 - t)`
/// for `(x, t)` on the unit sphere of R^{n+1}.
pub fn stereographic_project(q: &[f64]) -> Result<Point, TransformError> {
    let r = norm(q);
    if (r - 1.0).abs() > SPHERE_TOL {
        return Err(TransformError::NotOnSphere((r - 1.0).abs()));
    }
    let t = *q.last().expect("empty point");
    let denom = 1.0 - t;
    if denom.abs() < POLE_TOL {
        return Err(TransformError::PoleNotProjectable);
    }
    Ok(q[..q.len() - 1].iter().map(|c| c / denom).collect())
}

/// Companion projection from the south pole: `ρ̂(x, t) = x / (1 + t)`.
/// Satisfies `ι ∘ ρ̂ = ρ` away from both poles.
pub fn stereographic_project_south(q: &[f64]) -> Result<Point, TransformError> {
    let r = norm(q);
    if (r - 1.0).abs() > SPHERE_TOL {
        return Err(TransformError::NotOnSphere((r - 1.0).abs()));
    }
    let t = *q.last().expect("empty point");
    let denom = 1.0 + t;
    if denom.abs() < POLE_TOL {
        return Err(TransformError::PoleNotProjectable);
    }
    Ok(q[..q.len() - 1].iter().map(|c| c / denom).collect())
}

/// Inverse of `ρ`: lifts x ∈ R^n onto the unit sphere of R^{n+1},
/// `ρ⁻¹(x) = (2x, ||x||² - 1) / (||x||² + 1)`. `ρ⁻¹(0) = -e_{n+1}`.
pub fn stereographic_lift(x: &[f64]) -> Point {
    let r2 = crate::geom::dot(x, x);
    let denom = r2 + 1.0;
    let mut q: Point = x.iter().map(|c| 2.0 * c / denom).collect();
    q.push((r2 - 1.0) / denom);
    q
}

/// The north pole e_{n+1} of the sphere in R^{n+1} (n = `ambient_dim`).
pub fn north_pole(ambient_dim: usize) -> Point {
    let mut p = vec![0.0; ambient_dim + 1];
    p[ambient_dim] = 1.0;
    p
}

/// A cloud lifted onto the sphere, optionally with the north pole appended as
/// a distinguished node when the source set is declared unbounded.
#[derive(Debug, Clone)]
pub struct ModifiedCloud {
    pub cloud: SampleCloud,
    /// Index of the appended pole node, present iff the set was unbounded.
    pub pole: Option<usize>,
}

/// Stereographic modification: lifts every point to the sphere and appends
/// e_{n+1} exactly when the source set is declared unbounded.
pub fn stereographic_modify(cloud: &SampleCloud, unbounded: bool) -> ModifiedCloud {
    let mut lifted = SampleCloud {
        dim: cloud.dim + 1,
        points: cloud.points.iter().map(|p| stereographic_lift(p)).collect(),
        piece_label: cloud.piece_label.clone(),
        residual: cloud.residual.clone(),
        density_target: cloud.density_target,
        seed: cloud.seed,
    };
    let pole = if unbounded {
        let label = lifted.piece_label.iter().copied().max().map_or(0, |m| m + 1);
        Some(lifted.push(north_pole(cloud.dim), label, 0.0))
    } else {
        None
    };
    ModifiedCloud { cloud: lifted, pole }
}

/// `ψ(x) = (φ(x)/||x||) · x`: rescales x onto the radius φ. Requires the
/// value to lie in the equivalence band `[||x||/C, C||x||]`.
pub fn radius_normalize(x: &[f64], phi_value: f64, c: f64) -> Result<Point, TransformError> {
    let r = norm(x);
    if r < ORIGIN_GUARD {
        return Err(TransformError::OriginNotNormalizable);
    }
    let (lo, hi) = (r / c, c * r);
    if phi_value < lo - 1e-12 * (1.0 + hi) || phi_value > hi + 1e-12 * (1.0 + hi) {
        return Err(TransformError::RadiusOutOfBand { value: phi_value, lo, hi });
    }
    Ok(scale(x, phi_value / r))
}

/// A map known only through paired samples.
#[derive(Debug, Clone)]
pub struct SampledMap {
    pub domain_points: Vec<Point>,
    pub image_points: Vec<Point>,
    pub claimed_c: Option<f64>,
}

impl SampledMap {
    pub fn new(
        domain_points: Vec<Point>,
        image_points: Vec<Point>,
        claimed_c: Option<f64>,
    ) -> Result<Self, TransformError> {
        if domain_points.len() != image_points.len() {
            return Err(TransformError::LengthMismatch(domain_points.len(), image_points.len()));
        }
        Ok(SampledMap { domain_points, image_points, claimed_c })
    }

    pub fn len(&self) -> usize {
        self.domain_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain_points.is_empty()
    }

    /// Empirical Lipschitz constant: the max over sampled pairs of
    /// `||F(x)-F(y)|| / ||x-y||`, with the attaining pair.
    pub fn empirical_lipschitz(&self) -> (f64, (usize, usize)) {
        max_pair_ratio(&self.domain_points, &self.image_points)
    }

    /// Measured two-sided constant: max of the forward and inverse pair
    /// ratios. This is the ground-truth C of the sample, not a trusted claim.
    pub fn measured_bilipschitz(&self) -> f64 {
        let (fwd, _) = max_pair_ratio(&self.domain_points, &self.image_points);
        let (bwd, _) = max_pair_ratio(&self.image_points, &self.domain_points);
        fwd.max(bwd)
    }

    /// Verifies the claimed constant against every sampled pair.
    pub fn verify_claimed(&self) -> Result<f64, TransformError> {
        let claimed = self.claimed_c.ok_or(TransformError::MissingConstant)?;
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let dd = dist(&self.domain_points[i], &self.domain_points[j]);
                let di = dist(&self.image_points[i], &self.image_points[j]);
                if dd == 0.0 {
                    continue;
                }
                let ratio = (di / dd).max(dd / di);
                if ratio > claimed * (1.0 + 1e-9) {
                    return Err(TransformError::ClaimedConstantViolated { claimed, i, j, ratio });
                }
            }
        }
        Ok(claimed)
    }
}

fn max_pair_ratio(dom: &[Point], img: &[Point]) -> (f64, (usize, usize)) {
    let n = dom.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, (i, i));
            for j in (i + 1)..n {
                let dd = dist(&dom[i], &dom[j]);
                if dd == 0.0 {
                    continue;
                }
                let r = dist(&img[i], &img[j]) / dd;
                if r > best.0 {
                    best = (r, (i, j));
                }
            }
            best
        })
        .reduce(
            || (0.0, (0, 0)),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Conjugates a sampled map by inversion: returns `x ↦ ι(F(ι(x)))` sampled on
/// `ι(domain)`. The claimed constant must be present and must hold on the
/// sample; points inside the guard ball around the origin are excluded and
/// reported via the returned count.
pub struct ConjugationOutcome {
    pub map: SampledMap,
    pub excluded_by_guard: usize,
    /// 4C³ + C + 2C⁴ for the verified C.
    pub lipschitz_bound: f64,
}

pub fn conjugate_by_inversion(map: &SampledMap) -> Result<ConjugationOutcome, TransformError> {
    let c = map.verify_claimed()?;
    let diameter = map
        .domain_points
        .iter()
        .map(|p| norm(p))
        .fold(0.0f64, f64::max)
        * 2.0;
    let guard = 1e-6 * diameter.max(1e-12);

    let mut dom = Vec::new();
    let mut img = Vec::new();
    let mut excluded = 0usize;
    for (x, fx) in map.domain_points.iter().zip(&map.image_points) {
        if norm(x) < guard || norm(fx) < guard {
            excluded += 1;
            continue;
        }
        dom.push(invert(x)?);
        img.push(invert(fx)?);
    }
    let bound = 4.0 * c.powi(3) + c + 2.0 * c.powi(4);
    Ok(ConjugationOutcome {
        map: SampledMap { domain_points: dom, image_points: img, claimed_c: Some(bound) },
        excluded_by_guard: excluded,
        lipschitz_bound: bound,
    })
}

// ---------------------------------------------------------------------------
// Seeded generators used by the identity checks, the CLI transform task, and
// the acceptance suite. Radii stay within a few decades of 1 so relative
// tolerances of 1e-12 are meaningful.
// ---------------------------------------------------------------------------

pub fn seeded_points(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir: Point = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = norm(&dir);
            let target = 10f64.powf(rng.gen_range(-3.0..3.0));
            if r < 1e-9 {
                let mut p = vec![0.0; dim];
                p[0] = target;
                p
            } else {
                scale(&dir, target / r)
            }
        })
        .collect()
}

/// Seeded points on the unit sphere of R^{n+1}, kept away from both poles so
/// the two projections are defined.
pub fn seeded_sphere_points(ambient_dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q: Point = (0..=ambient_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&q);
        if r < 1e-6 {
            continue;
        }
        let q = scale(&q, 1.0 / r);
        if q[ambient_dim].abs() > 1.0 - 1e-3 {
            continue;
        }
        out.push(q);
    }
    out
}

/// A seeded bi-Lipschitz test map: rotation ∘ radial scaling ∘ small smooth
/// perturbation, fixing the origin. Returned as samples over an annulus,
/// with the constant left to be measured.
pub fn seeded_bilipschitz_map(dim: usize, count: usize, seed: u64) -> SampledMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda: f64 = rng.gen_range(0.7..1.8);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mu: f64 = rng.gen_range(0.0..0.12);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);

    let apply = |x: &[f64]| -> Point {
        // rotation in the first two coordinates, identity beyond
        let mut y = x.to_vec();
        if dim >= 2 {
            let (c, s) = (theta.cos(), theta.sin());
            let (a, b) = (x[0], x[1]);
            y[0] = c * a - s * b;
            y[1] = s * a + c * b;
        }
        let mut y = scale(&y, lambda);
        // smooth radial perturbation vanishing at 0: y += mu * sin(angle+phase) * y
        if dim >= 2 {
            let ang = y[1].atan2(y[0]);
            let f = 1.0 + mu * (ang + phase).sin();
            y = scale(&y, f);
        }
        y
    };

    let mut dom = Vec::with_capacity(count);
    while dom.len() < count {
        let p: Point = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&p);
        if r < 1e-3 {
            continue;
        }
        let target = rng.gen_range(0.2..2.0);
        dom.push(scale(&p, target / r));
    }
    let img: Vec<Point> = dom.iter().map(|p| apply(p)).collect();
    SampledMap { domain_points: dom, image_points: img, claimed_c: None }
}
