//! Fixed-step RK4 integration of wave trajectories.

use crate::error::{Error, Result};
use crate::geometry::{FinslerMetric, Point, Vector};
use crate::spacetime::{geodesic_rhs_affine, pregeodesic_rhs, SpacetimePoint, SpacetimeVector};

/// Launch velocities must be `F`-unit to this tolerance.
pub const LAUNCH_UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub method: Method,
    /// Rescale the velocity onto the indicatrix after every step.
    pub renormalize_each_step: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            method: Method::Rk4Fixed,
            renormalize_each_step: false,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

/// A time-parametrized wave ray sampled at every accepted step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub velocities: Vec<Vector>,
    /// `F(t, sigma, sigma') - 1` at each sample.
    pub f_residuals: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("empty trajectory")
    }

    pub fn end_position(&self) -> &Point {
        self.positions.last().expect("empty trajectory")
    }

    pub fn max_f_residual(&self) -> f64 {
        self.f_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    fn push(&mut self, t: f64, x: Point, v: Vector, residual: f64) {
        self.times.push(t);
        self.positions.push(x);
        self.velocities.push(v);
        self.f_residuals.push(residual);
    }
}

/// Sample times `t0, t0 + h, ..., tau`, the last step shortened to land on `tau`.
pub fn time_grid(t0: f64, tau: f64, step: f64) -> Vec<f64> {
    let span = (tau - t0) / step;
    let n = ((span - 1e-9).ceil() as usize).max(1);
    let mut grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 * step).collect();
    grid.push(tau);
    grid
}

fn validate(cfg: &IntegratorConfig, t0: f64, tau: f64) -> Result<()> {
    if !(cfg.step > 0.0) || !cfg.step.is_finite() {
        return Err(Error::Configuration(format!(
            "integrator step must be positive, got {}",
            cfg.step
        )));
    }
    if !(tau > t0) {
        return Err(Error::Argument(format!(
            "final time {tau} must exceed launch time {t0}"
        )));
    }
    let steps = ((tau - t0) / cfg.step).ceil();
    if steps > cfg.max_steps as f64 {
        return Err(Error::Configuration(format!(
            "{steps} steps needed but max_steps is {}",
            cfg.max_steps
        )));
    }
    Ok(())
}

fn rk4_step(f: &FinslerMetric, t: f64, h: f64, x: &Point, u: &Vector) -> Result<(Point, Vector)> {
    let half = 0.5 * h;
    let a1 = pregeodesic_rhs(f, t, x, u)?;
    let x2 = x + u * half;
    let u2 = u + &a1 * half;
    let a2 = pregeodesic_rhs(f, t + half, &x2, &u2)?;
    let x3 = x + &u2 * half;
    let u3 = u + &a2 * half;
    let a3 = pregeodesic_rhs(f, t + half, &x3, &u3)?;
    let x4 = x + &u3 * h;
    let u4 = u + &a3 * h;
    let a4 = pregeodesic_rhs(f, t + h, &x4, &u4)?;
    let x_next = x + (u + &u2 * 2.0 + &u3 * 2.0 + &u4) * (h / 6.0);
    let u_next = u + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
    Ok((x_next, u_next))
}

/// Integrates the wave trajectory launched from `x0` with `F`-unit velocity `v0` at
/// time `t0` up to `tau`.
pub fn integrate_trajectory(
    f: &FinslerMetric,
    x0: &Point,
    v0: &Vector,
    t0: f64,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    validate(cfg, t0, tau)?;
    let launch = f.eval(t0, x0, v0)?;
    if (launch - 1.0).abs() > LAUNCH_UNIT_TOLERANCE {
        return Err(Error::Argument(format!(
            "launch velocity must be F-unit, got F = {launch}"
        )));
    }
    let grid = time_grid(t0, tau, cfg.step);
    let mut traj = Trajectory::default();
    traj.push(t0, x0.clone(), v0.clone(), launch - 1.0);
    let mut x = x0.clone();
    let mut u = v0.clone();
    for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let step = rk4_step(f, t, t_next - t, &x, &u).and_then(|(xn, mut un)| {
            let mut norm = f.eval(t_next, &xn, &un)?;
            if cfg.renormalize_each_step {
                un /= norm;
                norm = f.eval(t_next, &xn, &un)?;
            }
            Ok((xn, un, norm))
        });
        match step {
            Ok((xn, un, norm)) => {
                x = xn;
                u = un;
                traj.push(t_next, x.clone(), u.clone(), norm - 1.0);
            }
            Err(source) => {
                return Err(Error::Integration {
                    time: t,
                    position: x.as_slice().to_vec(),
                    partial: Box::new(traj),
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(traj)
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * m1
}

fn hermite_slope(p0: f64, m0: f64, p1: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * m1
}

/// Cubic Hermite interpolation of position and velocity at the query times.
pub fn resample(traj: &Trajectory, query_times: &[f64]) -> Result<Vec<(Point, Vector)>> {
    if traj.is_empty() {
        return Err(Error::Argument(
            "cannot resample an empty trajectory".into(),
        ));
    }
    let (lo, hi) = (traj.start_time(), traj.end_time());
    query_times
        .iter()
        .map(|&q| {
            if !(lo..=hi).contains(&q) {
                return Err(Error::Argument(format!(
                    "query time {q} outside trajectory span [{lo}, {hi}]"
                )));
            }
            let k = match traj.times.binary_search_by(|t| t.total_cmp(&q)) {
                Ok(k) => return Ok((traj.positions[k].clone(), traj.velocities[k].clone())),
                Err(k) => k - 1,
            };
            let dt = traj.times[k + 1] - traj.times[k];
            let s = (q - traj.times[k]) / dt;
            let (x0, x1) = (&traj.positions[k], &traj.positions[k + 1]);
            let (v0, v1) = (&traj.velocities[k], &traj.velocities[k + 1]);
            let n = x0.len();
            let x = Point::from_fn(n, |i, _| hermite(x0[i], v0[i] * dt, x1[i], v1[i] * dt, s));
            let v = Vector::from_fn(n, |i, _| {
                hermite_slope(x0[i], v0[i] * dt, x1[i], v1[i] * dt, s) / dt
            });
            Ok((x, v))
        })
        .collect()
}

/// Affinely parametrized lightlike geodesic of `G`, kept for cross-checking the
/// time-parametrized equations.
#[derive(Debug, Clone, Default)]
pub struct AffineGeodesic {
    pub params: Vec<f64>,
    pub points: Vec<SpacetimePoint>,
    pub velocities: Vec<SpacetimeVector>,
}

impl AffineGeodesic {
    /// Spatial position at absolute time `t`, by inverting `t(s)` on the sampled curve.
    pub fn position_at_time(&self, t: f64) -> Result<Point> {
        let k = self
            .points
            .windows(2)
            .position(|w| w[0].t <= t && t <= w[1].t)
            .ok_or_else(|| {
                Error::Argument(format!("time {t} is not covered by the affine geodesic"))
            })?;
        let ds = self.params[k + 1] - self.params[k];
        let (p0, p1) = (&self.points[k], &self.points[k + 1]);
        let (w0, w1) = (&self.velocities[k], &self.velocities[k + 1]);
        let time = |s: f64| hermite(p0.t, w0.v0 * ds, p1.t, w1.v0 * ds, s);
        let rate = |s: f64| hermite_slope(p0.t, w0.v0 * ds, p1.t, w1.v0 * ds, s);
        let mut s = if p1.t > p0.t {
            (t - p0.t) / (p1.t - p0.t)
        } else {
            0.0
        };
        for _ in 0..50 {
            let r = time(s) - t;
            if r.abs() < 1e-15 {
                break;
            }
            s = (s - r / rate(s)).clamp(0.0, 1.0);
        }
        let n = p0.x.len();
        Ok(Point::from_fn(n, |i, _| {
            hermite(p0.x[i], w0.v[i] * ds, p1.x[i], w1.v[i] * ds, s)
        }))
    }
}

/// RK4 integration of the affine geodesic equations from the lightlike initial
/// velocity `(F(v0), v0)` until the time coordinate passes `t_end`.
pub fn integrate_affine_geodesic(
    f: &FinslerMetric,
    x0: &Point,
    v0: &Vector,
    t0: f64,
    t_end: f64,
    ds: f64,
    max_steps: usize,
) -> Result<AffineGeodesic> {
    let lift = f.eval(t0, x0, v0)?;
    let mut p = SpacetimePoint::new(t0, x0.clone());
    let mut w = SpacetimeVector::new(lift, v0.clone());
    let mut out = AffineGeodesic::default();
    let mut s = 0.0;
    out.params.push(s);
    out.points.push(p.clone());
    out.velocities.push(w.clone());
    let shift = |p: &SpacetimePoint, w: &SpacetimeVector, h: f64| {
        SpacetimePoint::new(p.t + w.v0 * h, &p.x + &w.v * h)
    };
    let add = |w: &SpacetimeVector, a: &SpacetimeVector, h: f64| {
        SpacetimeVector::new(w.v0 + a.v0 * h, &w.v + &a.v * h)
    };
    let mut steps = 0;
    while p.t < t_end {
        if steps == max_steps {
            return Err(Error::Configuration(format!(
                "affine geodesic did not reach t = {t_end} within {max_steps} steps"
            )));
        }
        let half = 0.5 * ds;
        let a1 = geodesic_rhs_affine(f, &p, &w)?;
        let (p2, w2) = (shift(&p, &w, half), add(&w, &a1, half));
        let a2 = geodesic_rhs_affine(f, &p2, &w2)?;
        let (p3, w3) = (shift(&p, &w2, half), add(&w, &a2, half));
        let a3 = geodesic_rhs_affine(f, &p3, &w3)?;
        let (p4, w4) = (shift(&p, &w3, ds), add(&w, &a3, ds));
        let a4 = geodesic_rhs_affine(f, &p4, &w4)?;
        let sixth = ds / 6.0;
        p = SpacetimePoint::new(
            p.t + (w.v0 + 2.0 * w2.v0 + 2.0 * w3.v0 + w4.v0) * sixth,
            &p.x + (&w.v + &w2.v * 2.0 + &w3.v * 2.0 + &w4.v) * sixth,
        );
        w = SpacetimeVector::new(
            w.v0 + (a1.v0 + 2.0 * a2.v0 + 2.0 * a3.v0 + a4.v0) * sixth,
            &w.v + (a1.v + a2.v * 2.0 + a3.v * 2.0 + a4.v) * sixth,
        );
        s += ds;
        steps += 1;
        out.params.push(s);
        out.points.push(p.clone());
        out.velocities.push(w.clone());
    }
    Ok(out)
}
