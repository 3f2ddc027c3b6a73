//! Runs a scenario and writes `trajectories.csv`, `fronts.csv` and `diagnostics.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wavefront_core::front::{advance_epochs, EpochResult};
use wavefront_core::geometry::FinslerMetric;
use wavefront_core::oracle::{brute_force_min_time, OracleConfig};
use wavefront_core::ErrorCategory;

use crate::scenario::Scenario;

/// Launches compared against the Fermat oracle when `--oracle` is given.
pub const ORACLE_LAUNCHES: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: wavefront_core::Error,
    },
    #[error("convexity: {0}")]
    Convexity(String),
    #[error("write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core { source, .. } => match source.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Numerical => 3,
                ErrorCategory::Geometry => 4,
                ErrorCategory::DegenerateFront => 5,
            },
            RunError::Convexity(_) => 4,
            RunError::Output { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Only run the convexity diagnostics.
    pub check_convexity_only: bool,
    pub oracle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexitySample {
    pub t: f64,
    pub x: [f64; 2],
    pub min_eigenvalue: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityDiagnostics {
    pub passed: bool,
    pub points: usize,
    pub directions: usize,
    pub min_eigenvalue: f64,
    /// Failing samples only.
    pub failures: Vec<ConvexitySample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochDiagnostics {
    pub epoch: usize,
    pub launch_time: f64,
    pub final_time: f64,
    pub launches: usize,
    pub max_f_drift: f64,
    pub max_orthogonality_residual: f64,
    pub max_launch_unit_residual: f64,
    pub intersecting_pairs: usize,
    pub removed: Vec<usize>,
    pub surviving: usize,
    pub max_gap: f64,
    pub dispersion_limit: f64,
    pub dispersion_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub epoch: usize,
    pub launch_index: usize,
    pub geodesic_time: f64,
    pub oracle_time: f64,
    /// `(oracle - geodesic) / geodesic`; negative values mean the oracle found a faster path.
    pub relative_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub convexity: ConvexityDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_f_drift: Option<f64>,
    pub epochs: Vec<EpochDiagnostics>,
    pub dispersion_warnings: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<OracleComparison>>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub diagnostics: Diagnostics,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct TrajectoryRow {
    epoch: usize,
    launch_index: usize,
    theta: f64,
    t: f64,
    x1: f64,
    x2: f64,
    v1: f64,
    v2: f64,
    #[serde(rename = "F_residual")]
    f_residual: f64,
}

#[derive(Serialize)]
struct FrontRow {
    epoch: usize,
    time: f64,
    /// Position along the front; empty for removed endpoints.
    order_index: Option<usize>,
    launch_index: usize,
    x1: f64,
    x2: f64,
    survived: u8,
}

pub fn convexity_diagnostics(s: &Scenario, f: &FinslerMetric) -> ConvexityDiagnostics {
    let directions = s.validation.convexity_samples;
    let samples: Vec<ConvexitySample> = s
        .validation_grid()
        .iter()
        .map(|(t, x)| {
            let r = f.strong_convexity_check(*t, x, directions);
            ConvexitySample {
                t: *t,
                x: [x[0], x[1]],
                min_eigenvalue: r.min_eigenvalue,
                passed: r.passed,
                failure: r.failure,
            }
        })
        .collect();
    ConvexityDiagnostics {
        passed: samples.iter().all(|c| c.passed),
        points: samples.len(),
        directions,
        min_eigenvalue: samples
            .iter()
            .map(|c| c.min_eigenvalue)
            .fold(f64::INFINITY, f64::min),
        failures: samples.into_iter().filter(|c| !c.passed).collect(),
    }
}

/// Runs the scenario and writes its outputs into `out_dir`, creating it if needed.
pub fn run_scenario(
    s: &Scenario,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out_dir).map_err(|e| output_error(out_dir, e))?;
    let f = s.metric();
    let mut diagnostics = Diagnostics {
        scenario: s.name.clone(),
        convexity: convexity_diagnostics(s, &f),
        max_f_drift: None,
        epochs: Vec::new(),
        dispersion_warnings: Vec::new(),
        oracle: None,
    };
    let diag_path = out_dir.join("diagnostics.json");
    if opts.check_convexity_only || !diagnostics.convexity.passed {
        write_json(&diag_path, &diagnostics)?;
        if !diagnostics.convexity.passed {
            let worst = &diagnostics.convexity.failures[0];
            return Err(RunError::Convexity(format!(
                "fundamental tensor not positive definite at {} of {} sample points (first at t = {}, x = ({}, {}), min eigenvalue {})",
                diagnostics.convexity.failures.len(),
                diagnostics.convexity.points,
                worst.t,
                worst.x[0],
                worst.x[1],
                worst.min_eigenvalue
            )));
        }
        return Ok(RunSummary {
            diagnostics,
            files: vec![diag_path],
        });
    }

    let fp = s.front_parametrization().map_err(|e| RunError::Core {
        stage: "front",
        source: wavefront_core::Error::Configuration(e.to_string()),
    })?;
    let results = advance_epochs(&f, &fp, &s.epoch_config()).map_err(|source| RunError::Core {
        stage: "propagate",
        source,
    })?;

    diagnostics.epochs = results.iter().map(epoch_diagnostics).collect();
    diagnostics.max_f_drift = Some(
        diagnostics
            .epochs
            .iter()
            .map(|e| e.max_f_drift)
            .fold(0.0, f64::max),
    );
    diagnostics.dispersion_warnings = diagnostics
        .epochs
        .iter()
        .filter(|e| e.dispersion_warning)
        .map(|e| e.epoch)
        .collect();
    if opts.oracle {
        diagnostics.oracle = Some(oracle_comparisons(&f, results.last().expect("one epoch"))?);
    }

    let traj_path = out_dir.join("trajectories.csv");
    write_trajectories(&traj_path, &results, s.output.trajectory_stride)?;
    let fronts_path = out_dir.join("fronts.csv");
    write_fronts(&fronts_path, &results)?;
    write_json(&diag_path, &diagnostics)?;
    Ok(RunSummary {
        diagnostics,
        files: vec![traj_path, fronts_path, diag_path],
    })
}

fn epoch_diagnostics(r: &EpochResult) -> EpochDiagnostics {
    EpochDiagnostics {
        epoch: r.epoch,
        launch_time: r.launch_time,
        final_time: r.wavemap.final_time,
        launches: r.wavemap.trajectories.len(),
        max_f_drift: r.wavemap.max_unit_drift(),
        max_orthogonality_residual: r.wavemap.max_orthogonality_residual(),
        max_launch_unit_residual: r
            .wavemap
            .launches
            .iter()
            .map(|l| l.unit_residual)
            .fold(0.0, f64::max),
        intersecting_pairs: r.filter.intersecting_pairs,
        removed: r.filter.removed.clone(),
        surviving: r.filter.surviving.len(),
        max_gap: r.front.max_gap,
        dispersion_limit: r.front.dispersion_limit,
        dispersion_warning: r.front.dispersion_warning,
    }
}

fn oracle_comparisons(
    f: &FinslerMetric,
    r: &EpochResult,
) -> Result<Vec<OracleComparison>, RunError> {
    let surviving = &r.filter.surviving;
    let count = ORACLE_LAUNCHES.min(surviving.len());
    let cfg = OracleConfig::default();
    (0..count)
        .map(|k| {
            let l = surviving[k * surviving.len() / count];
            let traj = &r.wavemap.trajectories[l];
            let geodesic_time = traj.end_time() - traj.start_time();
            let res = brute_force_min_time(
                f,
                &traj.positions[0],
                traj.end_position(),
                traj.start_time(),
                &cfg,
            )
            .map_err(|source| RunError::Core {
                stage: "oracle",
                source,
            })?;
            Ok(OracleComparison {
                epoch: r.epoch,
                launch_index: l,
                geodesic_time,
                oracle_time: res.time,
                relative_gap: (res.time - geodesic_time) / geodesic_time,
                converged: res.converged,
            })
        })
        .collect()
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_trajectories(path: &Path, results: &[EpochResult], stride: usize) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    for r in results {
        for (l, traj) in r.wavemap.trajectories.iter().enumerate() {
            let last = traj.len() - 1;
            for k in (0..traj.len()).filter(|&k| k % stride == 0 || k == last) {
                let (x, v) = (&traj.positions[k], &traj.velocities[k]);
                w.serialize(TrajectoryRow {
                    epoch: r.epoch,
                    launch_index: l,
                    theta: r.wavemap.thetas[l],
                    t: traj.times[k],
                    x1: x[0],
                    x2: x[1],
                    v1: v[0],
                    v2: v[1],
                    f_residual: traj.f_residuals[k],
                })
                .map_err(|e| output_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| output_error(path, e))
}

fn write_fronts(path: &Path, results: &[EpochResult]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    for r in results {
        let mut order = vec![None; r.wavemap.trajectories.len()];
        for (k, &l) in r.front.surviving_indices.iter().enumerate() {
            order[l] = Some(k);
        }
        for (l, end) in r.wavemap.endpoints().iter().enumerate() {
            w.serialize(FrontRow {
                epoch: r.epoch,
                time: r.front.time,
                order_index: order[l],
                launch_index: l,
                x1: end[0],
                x2: end[1],
                survived: u8::from(order[l].is_some()),
            })
            .map_err(|e| output_error(path, e))?;
        }
    }
    w.flush().map_err(|e| output_error(path, e))
}

fn write_json(path: &Path, d: &Diagnostics) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(d).map_err(|e| output_error(path, e))?;
    text.push('\n');
    fs::File::create(path)
        .and_then(|mut file| file.write_all(text.as_bytes()))
        .map_err(|e| output_error(path, e))
}
