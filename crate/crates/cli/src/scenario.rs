//! Scenario files: a TOML document describing the medium, the initial front and the
//! run parameters.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wavefront_core::front::{EpochConfig, FilterMode, FrontParametrization, MIN_LAUNCHES};
use wavefront_core::geometry::field::{constant, from_fn};
use wavefront_core::geometry::{
    point, vector, FinslerMetric, FnHeight, Point, RiemannianMetric, SharedField, SharedHeight,
    SlopeSign, Vector,
};
use wavefront_core::geometry::{Elliptical, Isotropic, Matsumoto};
use wavefront_core::integrator::IntegratorConfig;

use crate::expr::{Expression, Var};

/// Problem with a scenario, located by the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub medium: Medium,
    #[serde(default)]
    pub base: Base,
    pub front: Front,
    pub time: TimeSpec,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub filter: FilterSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub validation: ValidationSpec,
}

/// Speed profile. Every parameter is an expression in `t`, `x1`, `x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Medium {
    Isotropic(IsotropicMedium),
    Elliptical(EllipticalMedium),
    /// Requires a `graph_surface` base.
    Matsumoto(MatsumotoMedium),
}

impl Medium {
    pub const KINDS: [&'static str; 3] = ["isotropic", "elliptical", "matsumoto"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropicMedium {
    pub speed: Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticalMedium {
    pub semi_major: Expression,
    pub eccentricity: Expression,
    pub heading: Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatsumotoMedium {
    pub base_speed: Expression,
    pub slope_gain: Expression,
    #[serde(default)]
    pub slope: Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slope {
    #[default]
    Uphill,
    Downhill,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Base {
    #[default]
    Euclidean,
    GraphSurface(GraphSurface),
}

/// Metric induced on the graph of `height(x1, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSurface {
    pub height: Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Front {
    Circle(CircleFront),
    /// Closed front through the vertices, smoothed by a periodic spline.
    Polygon(PolygonFront),
    /// `r = scale (1 + lobe cos 2 theta)` around `center`.
    Peanut(PeanutFront),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleFront {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonFront {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeanutFront {
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "default_lobe")]
    pub lobe: f64,
}

fn one() -> f64 {
    1.0
}

fn default_lobe() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub t0: f64,
    pub tau_per_epoch: f64,
    #[serde(default = "one_epoch")]
    pub epochs: usize,
}

fn one_epoch() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub points: usize,
    pub step: f64,
    #[serde(default)]
    pub renormalize: bool,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            points: 64,
            step: IntegratorConfig::default().step,
            renormalize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterChoice {
    #[default]
    FullFilter,
    AssertNoIntersections,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default)]
    pub mode: FilterChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write every `trajectory_stride`-th sample; the last sample is always written.
    pub trajectory_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trajectory_stride: 1,
        }
    }
}

/// Sampling used to check admissibility and convexity of the medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    /// Padding added around the bounding box of the initial front.
    pub margin: f64,
    /// Grid points per axis.
    pub grid: usize,
    /// Directions per convexity check.
    pub convexity_samples: usize,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        Self {
            margin: 1.0,
            grid: 9,
            convexity_samples: 64,
        }
    }
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario = deserialize_scenario(text)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Parses a scenario without checking admissibility.
pub fn deserialize_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| ScenarioError::new("<document>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().message().trim().to_string();
        locate_in_section(text, &path).unwrap_or_else(|| {
            let path = if path == "." {
                "<document>".into()
            } else {
                path
            };
            ScenarioError::new(path, message)
        })
    })
}

/// Errors inside a `kind`-tagged section are reported by serde at the section
/// itself. Deserializing the section again as its variant recovers the inner key.
fn locate_in_section(text: &str, section: &str) -> Option<ScenarioError> {
    let doc: toml::Table = toml::from_str(text).ok()?;
    let mut table = doc.get(section)?.as_table()?.clone();
    let kind = table.remove("kind")?;
    let value = toml::Value::Table(table);
    match (section, kind.as_str()?) {
        ("medium", "isotropic") => probe::<IsotropicMedium>(section, value),
        ("medium", "elliptical") => probe::<EllipticalMedium>(section, value),
        ("medium", "matsumoto") => probe::<MatsumotoMedium>(section, value),
        ("base", "graph_surface") => probe::<GraphSurface>(section, value),
        ("front", "circle") => probe::<CircleFront>(section, value),
        ("front", "polygon") => probe::<PolygonFront>(section, value),
        ("front", "peanut") => probe::<PeanutFront>(section, value),
        _ => None,
    }
}

fn probe<T: serde::de::DeserializeOwned>(
    section: &str,
    value: toml::Value,
) -> Option<ScenarioError> {
    let e = serde_path_to_error::deserialize::<_, T>(value).err()?;
    let path = match e.path().to_string() {
        p if p == "." => section.to_string(),
        p => format!("{section}.{p}"),
    };
    Some(ScenarioError::new(
        path,
        e.into_inner().message().trim().to_string(),
    ))
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let t = &self.time;
        if !t.t0.is_finite() {
            return Err(ScenarioError::new("time.t0", "must be finite"));
        }
        if !(t.tau_per_epoch > 0.0 && t.tau_per_epoch.is_finite()) {
            return Err(ScenarioError::new(
                "time.tau_per_epoch",
                format!("must be positive, got {}", t.tau_per_epoch),
            ));
        }
        if t.epochs == 0 {
            return Err(ScenarioError::new(
                "time.epochs",
                "at least one epoch is required",
            ));
        }
        let d = &self.discretization;
        if d.points < MIN_LAUNCHES {
            return Err(ScenarioError::new(
                "discretization.points",
                format!(
                    "at least {MIN_LAUNCHES} launch points are required, got {}",
                    d.points
                ),
            ));
        }
        if !(d.step > 0.0 && d.step <= t.tau_per_epoch) {
            return Err(ScenarioError::new(
                "discretization.step",
                format!("must lie in (0, tau_per_epoch], got {}", d.step),
            ));
        }
        if let Some(limit) = self.filter.dispersion_limit {
            if !(limit > 0.0) {
                return Err(ScenarioError::new(
                    "filter.dispersion_limit",
                    format!("must be positive, got {limit}"),
                ));
            }
        }
        if self.output.trajectory_stride == 0 {
            return Err(ScenarioError::new(
                "output.trajectory_stride",
                "must be at least 1",
            ));
        }
        let v = &self.validation;
        if !(v.margin >= 0.0) || v.grid < 2 || v.convexity_samples < 8 {
            return Err(ScenarioError::new(
                "validation",
                "needs margin >= 0, grid >= 2 and convexity_samples >= 8",
            ));
        }
        self.front_parametrization()?;
        if matches!(self.medium, Medium::Matsumoto(_)) && self.base == Base::Euclidean {
            return Err(ScenarioError::new(
                "base.kind",
                "the matsumoto medium needs a graph_surface base",
            ));
        }
        self.check_parameters()?;
        self.check_speed()
    }

    pub fn total_time(&self) -> f64 {
        self.time.tau_per_epoch * self.time.epochs as f64
    }

    /// Space-time sample points used by validation and convexity diagnostics.
    pub fn validation_grid(&self) -> Vec<(f64, Point)> {
        let b = self.front_bbox();
        let pad = self.validation.margin;
        let n = self.validation.grid;
        let (lo, hi) = ([b[0] - pad, b[2] - pad], [b[1] + pad, b[3] + pad]);
        let t0 = self.time.t0;
        let mut out = Vec::with_capacity(3 * n * n);
        for t in [t0, t0 + 0.5 * self.total_time(), t0 + self.total_time()] {
            for i in 0..n {
                for j in 0..n {
                    let s = i as f64 / (n - 1) as f64;
                    let r = j as f64 / (n - 1) as f64;
                    out.push((
                        t,
                        point(&[lo[0] + s * (hi[0] - lo[0]), lo[1] + r * (hi[1] - lo[1])]),
                    ));
                }
            }
        }
        out
    }

    fn front_bbox(&self) -> [f64; 4] {
        let pts: Vec<[f64; 2]> = match &self.front {
            Front::Circle(CircleFront { center, radius }) => vec![
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ],
            Front::Polygon(PolygonFront { points }) => points.clone(),
            Front::Peanut(PeanutFront {
                center,
                scale,
                lobe,
            }) => {
                let r = scale * (1.0 + lobe);
                vec![
                    [center[0] - r, center[1] - r],
                    [center[0] + r, center[1] + r],
                ]
            }
        };
        pts.iter().fold(
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ],
            |b, p| {
                [
                    b[0].min(p[0]),
                    b[1].max(p[0]),
                    b[2].min(p[1]),
                    b[3].max(p[1]),
                ]
            },
        )
    }

    fn check_parameters(&self) -> Result<(), ScenarioError> {
        let grid = self.validation_grid();
        let each = |path: &str, e: &Expression, ok: &dyn Fn(f64) -> bool, what: &str| {
            for (t, x) in &grid {
                let value = e.eval(*t, x.as_slice());
                if !ok(value) {
                    return Err(ScenarioError::new(
                        path,
                        format!("{what}, got {value} at t = {t}, x = ({}, {})", x[0], x[1]),
                    ));
                }
            }
            Ok(())
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let finite = |v: f64| v.is_finite();
        if let Base::GraphSurface(GraphSurface { height }) = &self.base {
            each("base.height", height, &finite, "height must be finite")?;
        }
        match &self.medium {
            Medium::Isotropic(IsotropicMedium { speed }) => {
                each("medium.speed", speed, &positive, "speed must be positive")
            }
            Medium::Elliptical(EllipticalMedium {
                semi_major,
                eccentricity,
                heading,
            }) => {
                each(
                    "medium.semi_major",
                    semi_major,
                    &positive,
                    "semi-major speed must be positive",
                )?;
                each(
                    "medium.eccentricity",
                    eccentricity,
                    &|e| (0.0..1.0).contains(&e),
                    "eccentricity must satisfy 0 <= ε < 1",
                )?;
                each("medium.heading", heading, &finite, "heading must be finite")
            }
            Medium::Matsumoto(MatsumotoMedium {
                base_speed,
                slope_gain,
                ..
            }) => {
                each(
                    "medium.base_speed",
                    base_speed,
                    &positive,
                    "base speed must be positive",
                )?;
                each(
                    "medium.slope_gain",
                    slope_gain,
                    &finite,
                    "slope gain must be finite",
                )
            }
        }
    }

    /// The speed must be positive in every direction, not only its parameters.
    fn check_speed(&self) -> Result<(), ScenarioError> {
        let f = self.metric();
        let dirs: Vec<Vector> = (0..16)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 16.0;
                vector(&[a.cos(), a.sin()])
            })
            .collect();
        for (t, x) in self.validation_grid() {
            for v in &dirs {
                match f.eval(t, &x, v) {
                    Ok(value) if value.is_finite() && value > 0.0 => {}
                    Ok(value) => {
                        return Err(ScenarioError::new(
                            "medium",
                            format!(
                                "speed must be positive in every direction, F = {value} at t = {t}, x = ({}, {})",
                                x[0], x[1]
                            ),
                        ))
                    }
                    Err(e) => {
                        return Err(ScenarioError::new(
                            "medium",
                            format!("at t = {t}, x = ({}, {}): {e}", x[0], x[1]),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> FinslerMetric {
        let base = match &self.base {
            Base::Euclidean => RiemannianMetric::Euclidean,
            Base::GraphSurface(GraphSurface { height }) => {
                RiemannianMetric::GraphSurface(height_of(height))
            }
        };
        match &self.medium {
            Medium::Isotropic(IsotropicMedium { speed }) => {
                FinslerMetric::new(base, Arc::new(Isotropic::new(field(speed))))
            }
            Medium::Elliptical(EllipticalMedium {
                semi_major,
                eccentricity,
                heading,
            }) => FinslerMetric::new(
                base,
                Arc::new(Elliptical::new(
                    field(semi_major),
                    field(eccentricity),
                    field(heading),
                )),
            ),
            Medium::Matsumoto(MatsumotoMedium {
                base_speed,
                slope_gain,
                slope,
            }) => {
                let height = match &base {
                    RiemannianMetric::GraphSurface(h) => h.clone(),
                    RiemannianMetric::Euclidean => height_of(&Expression::constant(0.0)),
                };
                let sign = match slope {
                    Slope::Uphill => SlopeSign::Uphill,
                    Slope::Downhill => SlopeSign::Downhill,
                };
                FinslerMetric::new(
                    base,
                    Arc::new(Matsumoto::new(
                        field(base_speed),
                        field(slope_gain),
                        sign,
                        height,
                    )),
                )
            }
        }
    }

    pub fn front_parametrization(&self) -> Result<FrontParametrization, ScenarioError> {
        let fp = match &self.front {
            Front::Circle(CircleFront { center, radius }) => {
                FrontParametrization::circle(*center, *radius)
            }
            Front::Polygon(PolygonFront { points }) => {
                if points.len() < 3 {
                    return Err(ScenarioError::new(
                        "front.points",
                        format!("a polygon needs at least 3 vertices, got {}", points.len()),
                    ));
                }
                let vertices: Vec<Point> = points.iter().map(|p| point(p)).collect();
                FrontParametrization::polygon(&vertices)
            }
            Front::Peanut(PeanutFront {
                center,
                scale,
                lobe,
            }) => FrontParametrization::peanut(*center, *scale, *lobe),
        };
        fp.map_err(|e| ScenarioError::new("front", e.to_string()))
    }

    pub fn epoch_config(&self) -> EpochConfig {
        EpochConfig {
            t0: self.time.t0,
            tau_per_epoch: self.time.tau_per_epoch,
            epochs: self.time.epochs,
            points: self.discretization.points,
            integrator: IntegratorConfig {
                renormalize_each_step: self.discretization.renormalize,
                ..IntegratorConfig::with_step(self.discretization.step)
            },
            filter: match self.filter.mode {
                FilterChoice::FullFilter => FilterMode::Full,
                FilterChoice::AssertNoIntersections => FilterMode::AssertNoIntersections,
            },
            dispersion_limit: self.filter.dispersion_limit,
        }
    }
}

fn field(e: &Expression) -> SharedField {
    match e.as_constant() {
        Some(c) => constant(c),
        None => {
            let e = e.clone();
            from_fn(move |t, x: &Point| e.eval(t, x.as_slice()))
        }
    }
}

fn height_of(e: &Expression) -> SharedHeight {
    let z = e.clone();
    let height = FnHeight::new(move |x: &Point| z.eval(0.0, x.as_slice()));
    match (e.derivative(Var::X1), e.derivative(Var::X2)) {
        (Some(d1), Some(d2)) => Arc::new(height.with_gradient(move |x: &Point| {
            vector(&[d1.eval(0.0, x.as_slice()), d2.eval(0.0, x.as_slice())])
        })),
        _ => Arc::new(height),
    }
}
