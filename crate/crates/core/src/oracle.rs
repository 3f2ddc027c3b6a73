//! Independent checks: traveltime along arbitrary polylines, a brute-force Fermat
//! minimizer and closed-form reference fronts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{FinslerMetric, Point, Vector};

/// Default RK4 substeps per polyline segment.
pub const DEFAULT_SUBSTEPS: usize = 256;

/// Piecewise linear path with fixed endpoints, traversed from `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    points: Vec<Point>,
    t0: f64,
}

impl PolylinePath {
    pub fn new(points: Vec<Point>, t0: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument(format!(
                "a path needs at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[0].len() != w[1].len() {
                return Err(Error::Argument("path points differ in dimension".into()));
            }
            if w[0] == w[1] {
                return Err(Error::Argument(format!(
                    "path points {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(Self { points, t0 })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Euclidean length in coordinates.
    pub fn coordinate_length(&self) -> f64 {
        self.points.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
    }
}

/// Arrival time minus `t0` along the path, with [`DEFAULT_SUBSTEPS`] per segment.
pub fn traveltime_of_path(f: &FinslerMetric, path: &PolylinePath) -> Result<f64> {
    traveltime_with_substeps(f, path, DEFAULT_SUBSTEPS)
}

/// Integrates `dt/ds = F(t, sigma(s), sigma'(s))` segment by segment with RK4.
pub fn traveltime_with_substeps(
    f: &FinslerMetric,
    path: &PolylinePath,
    substeps: usize,
) -> Result<f64> {
    let substeps = substeps.max(1);
    let h = 1.0 / substeps as f64;
    let mut t = path.t0;
    for w in path.points.windows(2) {
        let a = &w[0];
        let d: Vector = &w[1] - a;
        let rate = |t: f64, s: f64| f.eval(t, &(a + &d * s), &d);
        for k in 0..substeps {
            let s = k as f64 * h;
            let k1 = rate(t, s)?;
            let k2 = rate(t + 0.5 * h * k1, s + 0.5 * h)?;
            let k3 = rate(t + 0.5 * h * k2, s + 0.5 * h)?;
            let k4 = rate(t + h * k3, s + h)?;
            t += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
    }
    Ok(t - path.t0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best traveltime over all starts.
    pub time: f64,
    pub path: PolylinePath,
    /// False when the best start hit the iteration cap before its simplex collapsed.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Interior control points.
    pub q: usize,
    /// Nelder-Mead iterations per start.
    pub iters: usize,
    /// RK4 substeps per segment while optimizing.
    pub substeps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            q: 8,
            iters: 4000,
            substeps: 16,
        }
    }
}

/// Smallest traveltime over polylines with `q` interior control points, by
/// Nelder-Mead from the straight chord and four deterministic bends of it. The
/// winning path is re-timed with [`DEFAULT_SUBSTEPS`].
pub fn brute_force_min_time(
    f: &FinslerMetric,
    start: &Point,
    end: &Point,
    t0: f64,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    if cfg.q < 3 {
        return Err(Error::Argument(format!(
            "at least 3 interior control points are required, got {}",
            cfg.q
        )));
    }
    let n = start.len();
    if end.len() != n || n < 2 {
        return Err(Error::Argument(
            "start and end must share a dimension >= 2".into(),
        ));
    }
    let chord = end - start;
    let length = chord.norm();
    if !(length > 0.0) {
        return Err(Error::Argument("start and end coincide".into()));
    }
    // A unit normal to the chord in the first two coordinates.
    let mut normal = Vector::zeros(n);
    normal[0] = -chord[1] / chord.rows(0, 2).norm().max(f64::MIN_POSITIVE);
    normal[1] = chord[0] / chord.rows(0, 2).norm().max(f64::MIN_POSITIVE);

    let q = cfg.q;
    let seed = |amp: f64, waves: f64| -> Vec<f64> {
        let mut x = Vec::with_capacity(q * n);
        for i in 1..=q {
            let s = i as f64 / (q + 1) as f64;
            let p = start
                + &chord * s
                + &normal * (amp * length * (waves * std::f64::consts::PI * s).sin());
            x.extend(p.iter());
        }
        x
    };
    let seeds = [
        seed(0.0, 1.0),
        seed(0.1, 1.0),
        seed(-0.1, 1.0),
        seed(0.05, 2.0),
        seed(-0.05, 2.0),
    ];
    let build = |x: &[f64]| -> Result<PolylinePath> {
        let mut pts = Vec::with_capacity(q + 2);
        pts.push(start.clone());
        pts.extend(x.chunks(n).map(Point::from_column_slice));
        pts.push(end.clone());
        PolylinePath::new(pts, t0)
    };
    let cost = |x: &[f64]| -> f64 {
        build(x)
            .and_then(|p| traveltime_with_substeps(f, &p, cfg.substeps))
            .unwrap_or(f64::INFINITY)
    };
    let runs: Vec<(Vec<f64>, f64, bool)> = seeds
        .par_iter()
        .map(|x0| nelder_mead(&cost, x0, 0.05 * length, cfg.iters))
        .collect();
    let (best, _, converged) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    let path = build(&best)?;
    let time = traveltime_of_path(f, &path)?;
    Ok(OracleResult {
        time,
        path,
        converged,
    })
}

/// Minimizes `cost` from `x0`; returns the best point, its value and whether the
/// simplex collapsed before `iters` iterations.
pub fn nelder_mead(
    cost: &(impl Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    scale: f64,
    iters: usize,
) -> (Vec<f64>, f64, bool) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), cost(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += scale;
        let c = cost(&x);
        simplex.push((x, c));
    }
    let along = |from: &[f64], to: &[f64], coef: f64| -> Vec<f64> {
        from.iter()
            .zip(to)
            .map(|(a, b)| a + coef * (b - a))
            .collect()
    };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[d].1);
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= 1e-12 * lo.abs().max(1e-300) && size <= 1e-9 * scale.max(1.0) {
            let (x, c) = simplex.swap_remove(0);
            return (x, c, true);
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let reflected = along(&centroid, &worst, -1.0);
        let fr = cost(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst, -2.0);
            let fe = cost(&expanded);
            simplex[d] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[d].1 {
                along(&centroid, &reflected, 0.5)
            } else {
                along(&centroid, &worst, 0.5)
            };
            let fc = cost(&contracted);
            if fc < fr.min(simplex[d].1) {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    entry.0 = along(&best, &entry.0, 0.5);
                    entry.1 = cost(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, c) = simplex.swap_remove(0);
    (x, c, false)
}

/// `r0 + int_0^tau c(t) dt` by adaptive Simpson quadrature to 1e-10.
pub fn reference_isotropic_radius(c_of_t: impl Fn(f64) -> f64, r0: f64, tau: f64) -> f64 {
    r0 + adaptive_simpson(&c_of_t, 0.0, tau, 1e-10)
}

pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Points of `x + tau * {F_{t,x} = 1}`: the front reached from a point source at `x`
/// in a medium that does not vary in space or time.
pub fn scaled_indicatrix(
    f: &FinslerMetric,
    t: f64,
    x: &Point,
    tau: f64,
    samples: usize,
) -> Result<Vec<Point>> {
    if x.len() != 2 {
        return Err(Error::Argument("scaled indicatrix is planar only".into()));
    }
    (0..samples)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / samples as f64;
            let dir = Vector::from_vec(vec![a.cos(), a.sin()]);
            Ok(x + f.indicatrix_point(t, x, &dir)? * tau)
        })
        .collect()
}
