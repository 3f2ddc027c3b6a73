//! Wavefront pipeline: sample the initial front, launch orthogonal trajectories,
//! drop cut points and interpolate the new front, epoch after epoch.

pub mod curve;
mod filter;
mod interpolate;
mod launch;
pub mod planar;

use rayon::prelude::*;

pub use curve::{
    signed_area, Circle, ClosedCurve, FrontParametrization, Orientation, PeriodicSpline, PolarCurve,
};
pub use filter::{filter_time_minimizing, first_crossings, Crossing, FilterReport};
pub use interpolate::{
    interpolate_front, mean_endpoint_spacing, CatmullRom, Wavefront, DISPERSION_FACTOR,
};
pub use launch::{
    orthogonal_outward_velocity, sample_front, LaunchVelocity, MIN_SAMPLES, ROOT_GRID,
    ROOT_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::geometry::{FinslerMetric, Point};
use crate::integrator::{integrate_trajectory, IntegratorConfig, Trajectory};

/// Smallest number of launch points accepted by [`propagate`].
pub const MIN_LAUNCHES: usize = 8;

/// Discrete wavemap: one trajectory per launch parameter, in launch order.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavemap {
    pub thetas: Vec<f64>,
    pub launches: Vec<LaunchVelocity>,
    pub trajectories: Vec<Trajectory>,
    pub launch_time: f64,
    pub final_time: f64,
    /// Integrator step shared by all trajectories.
    pub step: f64,
}

impl Wavemap {
    pub fn endpoints(&self) -> Vec<Point> {
        self.trajectories
            .iter()
            .map(|t| t.end_position().clone())
            .collect()
    }

    /// Largest `|F - 1|` over every sample of every trajectory.
    pub fn max_unit_drift(&self) -> f64 {
        self.trajectories
            .iter()
            .map(Trajectory::max_f_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_orthogonality_residual(&self) -> f64 {
        self.launches
            .iter()
            .map(|l| l.orthogonality_residual)
            .fold(0.0, f64::max)
    }
}

/// Launches `m` orthogonal trajectories from the front at `t0` and integrates them
/// to `tau`. Trajectories run in parallel; results keep launch order.
pub fn propagate(
    f: &FinslerMetric,
    fp: &FrontParametrization,
    t0: f64,
    tau: f64,
    m: usize,
    cfg: &IntegratorConfig,
) -> Result<Wavemap> {
    if m < MIN_LAUNCHES {
        return Err(Error::Configuration(format!(
            "at least {MIN_LAUNCHES} launch points are required, got {m}"
        )));
    }
    if !(tau > t0) {
        return Err(Error::Argument(format!(
            "final time {tau} must exceed launch time {t0}"
        )));
    }
    let thetas = sample_front(fp, m)?;
    let results: Vec<Result<(LaunchVelocity, Trajectory)>> = thetas
        .par_iter()
        .enumerate()
        .map(|(index, &theta)| {
            let run = || {
                let launch = orthogonal_outward_velocity(f, t0, fp, theta)?;
                let traj =
                    integrate_trajectory(f, &fp.alpha(theta), &launch.velocity, t0, tau, cfg)?;
                Ok((launch, traj))
            };
            run().map_err(|source| Error::Launch {
                index,
                source: Box::new(source),
            })
        })
        .collect();
    let mut launches = Vec::with_capacity(m);
    let mut trajectories = Vec::with_capacity(m);
    for r in results {
        let (launch, traj) = r?;
        launches.push(launch);
        trajectories.push(traj);
    }
    Ok(Wavemap {
        thetas,
        launches,
        trajectories,
        launch_time: t0,
        final_time: tau,
        step: cfg.step,
    })
}

/// How crossings between trajectories are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Remove trajectories that arrive late at a crossing.
    #[default]
    Full,
    /// Fail if any two trajectories cross.
    AssertNoIntersections,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochConfig {
    pub t0: f64,
    pub tau_per_epoch: f64,
    pub epochs: usize,
    pub points: usize,
    pub integrator: IntegratorConfig,
    pub filter: FilterMode,
    /// Absolute dispersion limit; defaults to a multiple of the mean endpoint spacing.
    pub dispersion_limit: Option<f64>,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            tau_per_epoch: 1.0,
            epochs: 1,
            points: 64,
            integrator: IntegratorConfig::default(),
            filter: FilterMode::Full,
            dispersion_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult {
    pub epoch: usize,
    pub launch_time: f64,
    pub wavemap: Wavemap,
    pub filter: FilterReport,
    pub front: Wavefront,
}

/// One pass of the pipeline from `t0` to `t0 + tau`.
pub fn run_epoch(
    f: &FinslerMetric,
    fp: &FrontParametrization,
    t0: f64,
    cfg: &EpochConfig,
) -> Result<(Wavemap, FilterReport, Wavefront)> {
    let wm = propagate(
        f,
        fp,
        t0,
        t0 + cfg.tau_per_epoch,
        cfg.points,
        &cfg.integrator,
    )?;
    let report = filter_time_minimizing(&wm)?;
    if cfg.filter == FilterMode::AssertNoIntersections && report.intersecting_pairs > 0 {
        return Err(Error::UnexpectedIntersections {
            count: report.intersecting_pairs,
        });
    }
    let front = interpolate_front(&wm, &report.surviving, cfg.dispersion_limit)?;
    Ok((wm, report, front))
}

/// Runs `cfg.epochs` epochs, restarting each from a periodic spline through the
/// previous front. Launch times accumulate: epoch `k` starts at `t0 + k tau`.
pub fn advance_epochs(
    f: &FinslerMetric,
    fp0: &FrontParametrization,
    cfg: &EpochConfig,
) -> Result<Vec<EpochResult>> {
    if cfg.epochs == 0 {
        return Err(Error::Configuration(
            "at least one epoch is required".into(),
        ));
    }
    if !(cfg.tau_per_epoch > 0.0) {
        return Err(Error::Configuration(format!(
            "epoch length must be positive, got {}",
            cfg.tau_per_epoch
        )));
    }
    // Outward stays on the same side relative to the enclosed region.
    let side = fp0.orientation().sign() * area_sign(fp0);
    let mut fp = fp0.clone();
    let mut out = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let launch_time = cfg.t0 + epoch as f64 * cfg.tau_per_epoch;
        let wrap = |source: Error| Error::Epoch {
            epoch,
            source: Box::new(source),
        };
        let (wavemap, filter, front) = run_epoch(f, &fp, launch_time, cfg).map_err(wrap)?;
        if epoch + 1 < cfg.epochs {
            let spline = std::sync::Arc::new(front.spline().map_err(wrap)?);
            let orientation = if side * curve_area_sign(spline.as_ref()) > 0.0 {
                Orientation::PositiveDeterminant
            } else {
                Orientation::NegativeDeterminant
            };
            fp = FrontParametrization::new(spline, orientation);
        }
        out.push(EpochResult {
            epoch,
            launch_time,
            wavemap,
            filter,
            front,
        });
    }
    Ok(out)
}

fn area_sign(fp: &FrontParametrization) -> f64 {
    curve_area_sign(fp.curve())
}

fn curve_area_sign(c: &dyn ClosedCurve) -> f64 {
    let samples = curve::sample_curve(c, 512);
    if signed_area(&samples) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
