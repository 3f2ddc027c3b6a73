//! Planar predicates: segment crossings, polyline simplicity, Hausdorff distance.

use robust::{orient2d, Coord};

use crate::geometry::Point;

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Exact orientation of `c` relative to the directed line `a -> b`: positive when
/// counterclockwise, zero when collinear.
pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

/// Crossing of segments `p0 p1` and `q0 q1` as the pair of segment parameters in
/// `[0, 1]`. Touching counts as crossing; collinear overlaps are not reported.
pub fn segment_intersection(
    p0: [f64; 2],
    p1: [f64; 2],
    q0: [f64; 2],
    q1: [f64; 2],
) -> Option<(f64, f64)> {
    let o1 = orient(p0, p1, q0);
    let o2 = orient(p0, p1, q1);
    if (o1 > 0.0 && o2 > 0.0) || (o1 < 0.0 && o2 < 0.0) {
        return None;
    }
    let o3 = orient(q0, q1, p0);
    let o4 = orient(q0, q1, p1);
    if (o3 > 0.0 && o4 > 0.0) || (o3 < 0.0 && o4 < 0.0) {
        return None;
    }
    if o1 == o2 || o3 == o4 {
        // Collinear or parallel touching; no single crossing point.
        return None;
    }
    let s = (o3 / (o3 - o4)).clamp(0.0, 1.0);
    let u = (o1 / (o1 - o2)).clamp(0.0, 1.0);
    Some((s, u))
}

pub(crate) fn bbox_overlap(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

/// `[xmin, ymin, xmax, ymax]` of a run of points.
pub(crate) fn bbox(points: &[[f64; 2]]) -> [f64; 4] {
    points.iter().fold(
        [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ],
        |b, p| {
            [
                b[0].min(p[0]),
                b[1].min(p[1]),
                b[2].max(p[0]),
                b[3].max(p[1]),
            ]
        },
    )
}

/// Number of crossing pairs among non-adjacent edges of a polyline.
pub fn self_intersections(points: &[Point], closed: bool) -> usize {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    let k = pts.len();
    let edges = if closed { k } else { k.saturating_sub(1) };
    let mut count = 0;
    for i in 0..edges {
        let (a0, a1) = (pts[i], pts[(i + 1) % k]);
        for j in (i + 1)..edges {
            let adjacent = j == i + 1 || (closed && i == 0 && j == edges - 1);
            if adjacent {
                continue;
            }
            let (b0, b1) = (pts[j], pts[(j + 1) % k]);
            if segment_intersection(a0, a1, b0, b1).is_some() {
                count += 1;
            }
        }
    }
    count
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// `max_{p in a} min_{q in b} |p - q|`.
pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
