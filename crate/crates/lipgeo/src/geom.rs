//! Small Euclidean helpers shared by every module: points are plain `Vec<f64>`
//! coordinate vectors, regions are balls or annuli.

use serde::{Deserialize, Serialize};

/// A point of R^n.
pub type Point = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

/// Total order on finite coordinate vectors: lexicographic by coordinates.
/// This is the canonical merge order that keeps parallel sampling
/// schedule-independent.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) => continue,
            Some(o) => return o,
            None => panic!("non-finite coordinate in point"),
        }
    }
    a.len().cmp(&b.len())
}

/// A bounded sampling region of R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball { center: Point, radius: f64 },
    Annulus { center: Point, inner: f64, outer: f64 },
}

impl Region {
    pub fn ball(center: Point, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn annulus(center: Point, inner: f64, outer: f64) -> Self {
        Region::Annulus { center, inner, outer }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => dist(p, center) <= *radius,
            Region::Annulus { center, inner, outer } => {
                let r = dist(p, center);
                *inner <= r && r <= *outer
            }
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Region::Ball { center, .. } => center,
            Region::Annulus { center, .. } => center,
        }
    }

    /// Outer radius of the region around its center.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Annulus { outer, .. } => *outer,
        }
    }

    /// Axis-aligned bounding box as (lo, hi) corner pair.
    pub fn bounding_box(&self) -> (Point, Point) {
        let (c, r) = (self.center(), self.outer_radius());
        let lo = c.iter().map(|x| x - r).collect();
        let hi = c.iter().map(|x| x + r).collect();
        (lo, hi)
    }
}

/// Farthest-point subsampling: greedy maximin seeds, deterministic
/// (starts at index 0, ties break on the smaller index).
pub fn farthest_point_indices(points: &[Point], k: usize) -> Vec<usize> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    let k = k.min(points.len());
    let mut chosen = Vec::with_capacity(k);
    let mut min_dist = vec![f64::INFINITY; points.len()];
    let mut next = 0usize;
    for _ in 0..k {
        chosen.push(next);
        for (i, d) in min_dist.iter_mut().enumerate() {
            let dn = dist(&points[i], &points[next]);
            if dn < *d {
                *d = dn;
            }
        }
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, d) in min_dist.iter().enumerate() {
            if *d > best.0 {
                best = (*d, i);
            }
        }
        next = best.1;
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_membership() {
        let b = Region::ball(vec![0.0, 0.0], 1.0);
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        let a = Region::annulus(vec![0.0, 0.0], 1.0, 2.0);
        assert!(a.contains(&[1.5, 0.0]));
        assert!(!a.contains(&[0.5, 0.0]));
        assert!(!a.contains(&[2.5, 0.0]));
    }

    #[test]
    fn lex_order_is_total_on_grid() {
        let mut pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.5]];
        pts.sort_by(|a, b| lex_cmp(a, b));
        assert_eq!(pts, vec![vec![0.0, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn farthest_points_spread() {
        let pts: Vec<Point> = (0..100).map(|i| vec![i as f64, 0.0]).collect();
        let idx = farthest_point_indices(&pts, 3);
        assert_eq!(idx[0], 0);
        assert_eq!(idx[1], 99);
        // third seed lands near the middle
        assert!((pts[idx[2]][0] - 49.5).abs() <= 1.0);
    }
}
