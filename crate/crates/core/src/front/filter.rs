//! Removal of trajectories that stop being time-minimizing (cut points).

use rayon::prelude::*;

use super::planar::{bbox, bbox_overlap, segment_intersection};
use super::Wavemap;
use crate::error::{Error, Result};

const BLOCK: usize = 16;

/// Outcome of the cut-point filter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterReport {
    /// Launch indices whose endpoints belong to the front, ascending.
    pub surviving: Vec<usize>,
    pub removed: Vec<usize>,
    /// Unordered trajectory pairs that cross at least once.
    pub intersecting_pairs: usize,
}

/// First crossing of `own` with `other`, measured along `own`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub other: usize,
    /// Arrival time of `own` at the crossing.
    pub own_time: f64,
    /// Arrival time of `other` at the crossing.
    pub other_time: f64,
}

struct Polyline {
    points: Vec<[f64; 2]>,
    blocks: Vec<[f64; 4]>,
    hull: [f64; 4],
}

impl Polyline {
    fn new(points: Vec<[f64; 2]>) -> Self {
        let segments = points.len().saturating_sub(1);
        let blocks = (0..segments.div_ceil(BLOCK))
            .map(|b| bbox(&points[b * BLOCK..=((b + 1) * BLOCK).min(segments)]))
            .collect();
        let hull = bbox(&points);
        Self {
            points,
            blocks,
            hull,
        }
    }

    fn segments_in(&self, block: usize) -> std::ops::Range<usize> {
        block * BLOCK..((block + 1) * BLOCK).min(self.points.len() - 1)
    }
}

fn first_crossing(own: &Polyline, other: &Polyline, times: &[f64]) -> Option<(f64, f64)> {
    if !bbox_overlap(&own.hull, &other.hull) {
        return None;
    }
    for (ob, obox) in own.blocks.iter().enumerate() {
        if !bbox_overlap(obox, &other.hull) {
            continue;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for (tb, tbox) in other.blocks.iter().enumerate() {
            if !bbox_overlap(obox, tbox) {
                continue;
            }
            for k in own.segments_in(ob) {
                if best.is_some_and(|(bk, bs, _)| (bk as f64 + bs) <= k as f64) {
                    break;
                }
                let (p0, p1) = (own.points[k], own.points[k + 1]);
                for j in other.segments_in(tb) {
                    let (q0, q1) = (other.points[j], other.points[j + 1]);
                    if let Some((s, u)) = segment_intersection(p0, p1, q0, q1) {
                        let other_time = times[j] + u * (times[j + 1] - times[j]);
                        let better = match best {
                            None => true,
                            Some((bk, bs, bt)) => (k as f64 + s, other_time) < (bk as f64 + bs, bt),
                        };
                        if better {
                            best = Some((k, s, other_time));
                        }
                    }
                }
            }
        }
        if let Some((k, s, other_time)) = best {
            let own_time = times[k] + s * (times[k + 1] - times[k]);
            return Some((own_time, other_time));
        }
    }
    None
}

fn polylines(wm: &Wavemap) -> Result<Vec<Polyline>> {
    let Some(first) = wm.trajectories.first() else {
        return Ok(Vec::new());
    };
    for (l, traj) in wm.trajectories.iter().enumerate() {
        if traj.times != first.times {
            return Err(Error::Argument(format!(
                "trajectory {l} is sampled at different times than trajectory 0"
            )));
        }
        if traj.positions.iter().any(|p| p.len() != 2) {
            return Err(Error::Argument(
                "the cut-point filter works on planar trajectories".into(),
            ));
        }
    }
    Ok(wm
        .trajectories
        .iter()
        .map(|t| Polyline::new(t.positions.iter().map(|p| [p[0], p[1]]).collect()))
        .collect())
}

/// For every trajectory, its first crossing with each other trajectory that it meets.
pub fn first_crossings(wm: &Wavemap) -> Result<Vec<Vec<Crossing>>> {
    let lines = polylines(wm)?;
    let Some(times) = wm.trajectories.first().map(|t| t.times.as_slice()) else {
        return Ok(Vec::new());
    };
    Ok((0..lines.len())
        .into_par_iter()
        .map(|l0| {
            (0..lines.len())
                .filter(|&l| l != l0)
                .filter_map(|l| {
                    first_crossing(&lines[l0], &lines[l], times).map(|(own_time, other_time)| {
                        Crossing {
                            other: l,
                            own_time,
                            other_time,
                        }
                    })
                })
                .collect()
        })
        .collect())
}

/// Keeps trajectory `l0` unless, at some first crossing, it arrives later than the
/// other trajectory by more than one integration step.
///
/// Arrivals within one step of each other are ties. A tie at the final time keeps
/// both trajectories; an earlier tie means both have already passed a point reached
/// simultaneously by another trajectory, so both are removed.
pub fn filter_time_minimizing(wm: &Wavemap) -> Result<FilterReport> {
    let crossings = first_crossings(wm)?;
    let end = wm
        .trajectories
        .first()
        .map_or(wm.final_time, |t| t.end_time());
    let mut report = FilterReport::default();
    for (l0, list) in crossings.iter().enumerate() {
        report.intersecting_pairs += list.iter().filter(|c| c.other > l0).count();
        let cut = list.iter().any(|c| {
            let lag = c.own_time - c.other_time;
            lag > wm.step || (lag.abs() <= wm.step && c.own_time.max(c.other_time) < end - wm.step)
        });
        if cut {
            report.removed.push(l0);
        } else {
            report.surviving.push(l0);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::integrator::Trajectory;

    fn straight(from: [f64; 2], velocity: [f64; 2], times: &[f64]) -> Trajectory {
        let mut t = Trajectory::default();
        for &s in times {
            t.times.push(s);
            t.positions.push(point(&[
                from[0] + s * velocity[0],
                from[1] + s * velocity[1],
            ]));
            t.velocities.push(point(&velocity));
            t.f_residuals.push(0.0);
        }
        t
    }

    fn wavemap(trajectories: Vec<Trajectory>, step: f64) -> Wavemap {
        let final_time = trajectories[0].end_time();
        Wavemap {
            thetas: (0..trajectories.len()).map(|l| l as f64).collect(),
            launches: Vec::new(),
            trajectories,
            launch_time: 0.0,
            final_time,
            step,
        }
    }

    fn times(step: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 * step).collect()
    }

    #[test]
    fn disjoint_radial_rays_all_survive() {
        let ts = times(0.01, 100);
        let rays = (0..16)
            .map(|l| {
                let a = std::f64::consts::TAU * l as f64 / 16.0;
                straight([a.cos(), a.sin()], [a.cos(), a.sin()], &ts)
            })
            .collect();
        let report = filter_time_minimizing(&wavemap(rays, 0.01)).unwrap();
        assert_eq!(report.surviving, (0..16).collect::<Vec<_>>());
        assert_eq!(report.intersecting_pairs, 0);
    }

    #[test]
    fn earlier_arrival_survives_a_crossing() {
        let ts = times(0.01, 200);
        // Ray 0 reaches (1, 0) at t = 1; ray 1 at t = 1.5.
        let a = straight([0.0, 0.0], [1.0, 0.0], &ts);
        let b = straight([1.0, -1.5], [0.0, 1.0], &ts);
        let report = filter_time_minimizing(&wavemap(vec![a, b], 0.01)).unwrap();
        assert_eq!(report.surviving, vec![0]);
        assert_eq!(report.removed, vec![1]);
        assert_eq!(report.intersecting_pairs, 1);
        let crossings = first_crossings(&wavemap(
            vec![
                straight([0.0, 0.0], [1.0, 0.0], &ts),
                straight([1.0, -1.5], [0.0, 1.0], &ts),
            ],
            0.01,
        ))
        .unwrap();
        assert!((crossings[0][0].own_time - 1.0).abs() < 1e-12);
        assert!((crossings[0][0].other_time - 1.5).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_arrival_at_the_front_is_a_tie() {
        // The rays meet at (0, 1) exactly at the final time.
        let ts = times(0.01, 100);
        let a = straight([-1.0, 0.0], [1.0, 1.0], &ts);
        let b = straight([1.0, 0.0], [-1.0, 1.0], &ts);
        let report = filter_time_minimizing(&wavemap(vec![a, b], 0.01)).unwrap();
        assert_eq!(report.surviving, vec![0, 1]);
        assert_eq!(report.intersecting_pairs, 1);
    }

    #[test]
    fn earlier_simultaneous_arrival_removes_both() {
        let ts = times(0.01, 200);
        let a = straight([-1.0, 0.0], [1.0, 1.0], &ts);
        let b = straight([1.0, 0.0], [-1.0, 1.0], &ts);
        let report = filter_time_minimizing(&wavemap(vec![a, b], 0.01)).unwrap();
        assert!(report.surviving.is_empty());
        assert_eq!(report.removed, vec![0, 1]);
    }

    #[test]
    fn near_ties_within_one_step_are_ties() {
        // a reaches (0, 1) at t = 1, b at t = 1.005, less than one step later.
        let ts = times(0.01, 101);
        let a = straight([-1.0, 0.0], [1.0, 1.0], &ts);
        let b = straight([1.005, -0.005], [-1.0, 1.0], &ts);
        let report = filter_time_minimizing(&wavemap(vec![a, b], 0.01)).unwrap();
        assert_eq!(report.surviving, vec![0, 1]);
    }

    #[test]
    fn only_the_first_crossing_counts() {
        // b crosses the x axis at s = acos(2/3)/6 and again at s = (2 pi - acos(2/3))/6.
        let ts = times(0.01, 400);
        let a = straight([0.0, 0.0], [1.0, 0.0], &ts);
        let mut b = Trajectory::default();
        for &s in &ts {
            b.times.push(s);
            b.positions
                .push(point(&[0.5 + 0.5 * s, 0.3 * (1.0 - (6.0 * s).cos()) - 0.1]));
            b.velocities.push(point(&[0.5, 1.8 * (6.0 * s).sin()]));
            b.f_residuals.push(0.0);
        }
        let crossings = first_crossings(&wavemap(vec![a, b], 0.01)).unwrap();
        let s1 = (2.0f64 / 3.0).acos() / 6.0;
        let first = crossings[0][0];
        assert!((first.other_time - s1).abs() < 1e-3);
        assert!((first.own_time - (0.5 + 0.5 * s1)).abs() < 1e-3);
        assert_eq!(crossings[1][0].own_time, first.other_time);
    }

    #[test]
    fn mismatched_sampling_is_rejected() {
        let a = straight([0.0, 0.0], [1.0, 0.0], &times(0.01, 100));
        let b = straight([0.0, 1.0], [1.0, 0.0], &times(0.02, 50));
        assert!(matches!(
            filter_time_minimizing(&wavemap(vec![a, b], 0.01)),
            Err(Error::Argument(_))
        ));
    }
}
