//! The front at the final time: ordered surviving endpoints and a smooth closed
//! curve through them.

use super::curve::{ClosedCurve, PeriodicSpline};
use super::Wavemap;
use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};

/// Default dispersion limit as a multiple of the mean endpoint spacing.
pub const DISPERSION_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefront {
    pub time: f64,
    /// Surviving endpoints ordered by launch parameter.
    pub points: Vec<Point>,
    pub surviving_indices: Vec<usize>,
    /// Largest distance between consecutive points of the closed polyline.
    pub max_gap: f64,
    pub dispersion_limit: f64,
    /// Set when `max_gap` exceeds `dispersion_limit`; the front needs more points.
    pub dispersion_warning: bool,
}

impl Wavefront {
    /// Closed Catmull-Rom curve through the ordered points.
    pub fn catmull_rom(&self) -> CatmullRom {
        CatmullRom {
            points: self.points.clone(),
        }
    }

    /// `per_segment` samples of the Catmull-Rom curve between consecutive points.
    pub fn sample(&self, per_segment: usize) -> Vec<Point> {
        let curve = self.catmull_rom();
        let total = self.points.len() * per_segment.max(1);
        (0..total)
            .map(|k| curve.point(k as f64 / per_segment.max(1) as f64))
            .collect()
    }

    /// Chord-length periodic cubic spline through the points, for restarting.
    pub fn spline(&self) -> Result<PeriodicSpline> {
        PeriodicSpline::new(&self.points)
    }
}

/// Uniform closed Catmull-Rom curve; node `i` sits at parameter `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CatmullRom {
    points: Vec<Point>,
}

impl CatmullRom {
    fn window(&self, theta: f64) -> ([&Point; 4], f64) {
        let k = self.points.len();
        let s = theta.rem_euclid(k as f64);
        let i = (s.floor() as usize).min(k - 1);
        let u = s - i as f64;
        let at = |j: isize| &self.points[(i as isize + j).rem_euclid(k as isize) as usize];
        ([at(-1), at(0), at(1), at(2)], u)
    }
}

impl ClosedCurve for CatmullRom {
    fn point(&self, theta: f64) -> Point {
        let ([p0, p1, p2, p3], u) = self.window(theta);
        let (u2, u3) = (u * u, u * u * u);
        (p1 * 2.0
            + (p2 - p0) * u
            + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * u2
            + (-p0 + p1 * 3.0 - p2 * 3.0 + p3) * u3)
            * 0.5
    }

    fn tangent(&self, theta: f64) -> Vector {
        let ([p0, p1, p2, p3], u) = self.window(theta);
        ((p2 - p0)
            + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * (2.0 * u)
            + (-p0 + p1 * 3.0 - p2 * 3.0 + p3) * (3.0 * u * u))
            * 0.5
    }

    fn period(&self) -> f64 {
        self.points.len() as f64
    }
}

fn max_closed_gap(points: &[Point]) -> f64 {
    let k = points.len();
    (0..k)
        .map(|i| (&points[(i + 1) % k] - &points[i]).norm())
        .fold(0.0, f64::max)
}

/// Mean spacing of all endpoints of the wavemap, taken as a closed polyline.
pub fn mean_endpoint_spacing(wm: &Wavemap) -> f64 {
    let ends = wm.endpoints();
    let k = ends.len();
    if k < 2 {
        return 0.0;
    }
    (0..k)
        .map(|i| (&ends[(i + 1) % k] - &ends[i]).norm())
        .sum::<f64>()
        / k as f64
}

/// Orders the surviving endpoints and checks their spacing. The default
/// `dispersion_limit` is [`DISPERSION_FACTOR`] times the mean spacing of all endpoints.
pub fn interpolate_front(
    wm: &Wavemap,
    surviving: &[usize],
    dispersion_limit: Option<f64>,
) -> Result<Wavefront> {
    let mut indices = surviving.to_vec();
    indices.sort_unstable();
    indices.dedup();
    if let Some(&bad) = indices.iter().find(|&&l| l >= wm.trajectories.len()) {
        return Err(Error::Argument(format!(
            "surviving index {bad} out of range for {} trajectories",
            wm.trajectories.len()
        )));
    }
    if indices.len() < 3 {
        return Err(Error::DegenerateFront(format!(
            "only {} surviving endpoints; at least 3 are needed",
            indices.len()
        )));
    }
    let points: Vec<Point> = indices
        .iter()
        .map(|&l| wm.trajectories[l].end_position().clone())
        .collect();
    let max_gap = max_closed_gap(&points);
    let limit = dispersion_limit.unwrap_or_else(|| DISPERSION_FACTOR * mean_endpoint_spacing(wm));
    Ok(Wavefront {
        time: wm.final_time,
        points,
        surviving_indices: indices,
        max_gap,
        dispersion_limit: limit,
        dispersion_warning: max_gap > limit,
    })
}
