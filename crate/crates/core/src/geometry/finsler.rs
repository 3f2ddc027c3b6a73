use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::base::{check_dims, RiemannianMetric};
use super::field::{SharedField, SharedHeight};
use super::profile::{Elliptical, Isotropic, Matsumoto, ProfileKind, SlopeSign, SpeedProfile};
use super::{Point, Vector};
use crate::error::{Error, Result};

/// Step policy for every finite difference taken in this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Relative step for second differences of `F^2` in the direction variable.
    pub hessian_rel_step: f64,
    /// Relative step for partials in time and position coordinates.
    pub coord_rel_step: f64,
    /// Richardson-extrapolate coordinate partials (two step sizes, fourth order).
    pub richardson: bool,
    /// Use closed-form direction derivatives when the profile offers them.
    pub use_analytic: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            hessian_rel_step: 1e-3,
            coord_rel_step: 1e-5,
            richardson: false,
            use_analytic: true,
        }
    }
}

/// Coordinates of the fundamental tensor `g_v` of `F_{t,x}`: the Hessian of `F^2 / 2` at `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor(pub DMatrix<f64>);

impl FundamentalTensor {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `g_v(u, w)`.
    pub fn apply(&self, u: &Vector, w: &Vector) -> f64 {
        u.dot(&(&self.0 * w))
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub samples: usize,
    pub min_eigenvalue: f64,
    /// Unit direction at which the smallest eigenvalue was observed.
    pub worst_direction: Vec<f64>,
    pub passed: bool,
    /// Evaluation failures encountered while sampling, if any.
    pub failure: Option<String>,
}

struct AnalyticParts {
    h: DMatrix<f64>,
    hv: Vector,
    q: f64,
    w: f64,
    dw: Vector,
    ddw: DMatrix<f64>,
}

/// Time-dependent Finsler metric `F_{t,x}(v) = |v|_h / V(t, x, v)`.
#[derive(Clone)]
pub struct FinslerMetric {
    base: RiemannianMetric,
    profile: Arc<dyn SpeedProfile>,
    fd: FdConfig,
}

impl fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerMetric")
            .field("base", &self.base)
            .field("profile", &self.profile.kind())
            .field("fd", &self.fd)
            .finish()
    }
}

impl FinslerMetric {
    pub fn new(base: RiemannianMetric, profile: Arc<dyn SpeedProfile>) -> Self {
        Self {
            base,
            profile,
            fd: FdConfig::default(),
        }
    }

    /// Isotropic speed `c(t, x)` over the Euclidean plane/space.
    pub fn isotropic(speed: SharedField) -> Self {
        Self::new(RiemannianMetric::Euclidean, Arc::new(Isotropic::new(speed)))
    }

    /// Elliptical spread over the Euclidean plane.
    pub fn elliptical(
        semi_major: SharedField,
        eccentricity: SharedField,
        heading: SharedField,
    ) -> Self {
        Self::new(
            RiemannianMetric::Euclidean,
            Arc::new(Elliptical::new(semi_major, eccentricity, heading)),
        )
    }

    /// Slope-driven spread on the graph of `height`, measured with the induced metric.
    pub fn matsumoto(
        base_speed: SharedField,
        slope_gain: SharedField,
        sign: SlopeSign,
        height: SharedHeight,
    ) -> Self {
        Self::new(
            RiemannianMetric::GraphSurface(height.clone()),
            Arc::new(Matsumoto::new(base_speed, slope_gain, sign, height)),
        )
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn base(&self) -> &RiemannianMetric {
        &self.base
    }

    pub fn profile(&self) -> &dyn SpeedProfile {
        self.profile.as_ref()
    }

    pub fn fd(&self) -> &FdConfig {
        &self.fd
    }

    pub fn is_isotropic(&self) -> bool {
        self.profile.kind() == ProfileKind::Isotropic
    }

    fn speed(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        let speed = self.profile.speed(t, x, v)?;
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Profile(format!(
                "speed must be positive and finite, got {speed} at t = {t}, x = {:?}, v = {:?}",
                x.as_slice(),
                v.as_slice()
            )));
        }
        Ok(speed)
    }

    /// `F_{t,x}(v)`, with `F(0) = 0`.
    pub fn eval(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        check_dims(x, v)?;
        if v.iter().all(|c| *c == 0.0) {
            return Ok(0.0);
        }
        let norm = self.base.norm(x, v)?;
        Ok(norm / self.speed(t, x, v)?)
    }

    fn f2(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        Ok(self.eval(t, x, v)?.powi(2))
    }

    fn analytic_parts(&self, t: f64, x: &Point, v: &Vector) -> Result<Option<AnalyticParts>> {
        if !self.fd.use_analytic {
            return Ok(None);
        }
        let Some(jet) = self.profile.jet(t, x, v)? else {
            return Ok(None);
        };
        if !(jet.value > 0.0) || !jet.value.is_finite() {
            return Err(Error::Profile(format!(
                "speed must be positive and finite, got {} at t = {t}, x = {:?}",
                jet.value,
                x.as_slice()
            )));
        }
        let h = self.base.matrix(x)?;
        let hv = &h * v;
        let q = v.dot(&hv);
        // F^2 = Q W with Q = |v|_h^2 and W = V^-2.
        let inv = 1.0 / jet.value;
        let w = inv * inv;
        let dw = &jet.grad * (-2.0 * inv * w);
        let ddw = (&jet.grad * jet.grad.transpose()) * (6.0 * w * w) - &jet.hess * (2.0 * inv * w);
        Ok(Some(AnalyticParts {
            h,
            hv,
            q,
            w,
            dw,
            ddw,
        }))
    }

    /// `g_v(v, .) = (1/2) grad_v F^2`, the covector used by orthogonality conditions.
    pub fn half_gradient_f2(&self, t: f64, x: &Point, v: &Vector) -> Result<Vector> {
        check_dims(x, v)?;
        ensure_nonzero(v)?;
        if let Some(p) = self.analytic_parts(t, x, v)? {
            return Ok(&p.hv * p.w + &p.dw * (0.5 * p.q));
        }
        let n = v.len();
        let delta = self.fd.hessian_rel_step * v.norm().max(1.0);
        let mut out = Vector::zeros(n);
        for i in 0..n {
            let mut probe = v.clone();
            out[i] = 0.5
                * first_difference(
                    |s| {
                        probe[i] = v[i] + s;
                        self.f2(t, x, &probe)
                    },
                    delta,
                )?;
        }
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient of F^2 at v = {:?}",
                v.as_slice()
            )));
        }
        Ok(out)
    }

    /// Fundamental tensor, analytic when the profile supplies direction derivatives.
    pub fn fundamental_tensor(&self, t: f64, x: &Point, v: &Vector) -> Result<FundamentalTensor> {
        check_dims(x, v)?;
        ensure_nonzero(v)?;
        if let Some(p) = self.analytic_parts(t, x, v)? {
            // (1/2) Hess(Q W) = h W + (hv) dW^T + dW (hv)^T + (Q/2) ddW
            let g = &p.h * p.w
                + &p.hv * p.dw.transpose()
                + &p.dw * p.hv.transpose()
                + &p.ddw * (0.5 * p.q);
            return Ok(FundamentalTensor(symmetrize(g)));
        }
        self.fundamental_tensor_fd(t, x, v)
    }

    /// Fundamental tensor from central differences of `F^2`.
    ///
    /// Works in an orthonormal frame `{v/|v|, e_1, ..}`. Homogeneity fixes
    /// `g(v, v) = F^2` and `g(v, e) = (1/2) dF^2(e)`, so only the transverse block
    /// needs second differences; those use a fourth-order five-point stencil.
    pub fn fundamental_tensor_fd(
        &self,
        t: f64,
        x: &Point,
        v: &Vector,
    ) -> Result<FundamentalTensor> {
        check_dims(x, v)?;
        ensure_nonzero(v)?;
        let n = v.len();
        // g is 0-homogeneous in v; differentiate at the unit vector.
        let v = &(v / v.norm());
        let frame = orthonormal_frame(v);
        let delta = self.fd.hessian_rel_step;
        let f2_along = |u: &Vector, s: f64| self.f2(t, x, &(v + u * s));
        let second = |u: &Vector| -> Result<f64> {
            let c = f2_along(u, 0.0)?;
            let p1 = f2_along(u, delta)?;
            let m1 = f2_along(u, -delta)?;
            let p2 = f2_along(u, 2.0 * delta)?;
            let m2 = f2_along(u, -2.0 * delta)?;
            Ok((-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * delta * delta))
        };
        let mut k = DMatrix::zeros(n, n);
        k[(0, 0)] = self.f2(t, x, v)?;
        for a in 1..n {
            let e = frame.column(a).into_owned();
            let d = first_difference(|s| f2_along(&e, s), delta)?;
            k[(0, a)] = 0.5 * d;
            k[(a, 0)] = 0.5 * d;
            k[(a, a)] = 0.5 * second(&e)?;
            for b in 1..a {
                let f = frame.column(b).into_owned();
                let mixed = (second(&(&e + &f))? - second(&(&e - &f))?) / 8.0;
                k[(a, b)] = mixed;
                k[(b, a)] = mixed;
            }
        }
        if let Some((pos, _)) = k.iter().enumerate().find(|(_, e)| !e.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite difference of F^2 in frame directions ({}, {}) at v = {:?}",
                pos % n,
                pos / n,
                v.as_slice()
            )));
        }
        Ok(FundamentalTensor(symmetrize(
            &frame * k * frame.transpose(),
        )))
    }

    /// Point of the indicatrix `{F_{t,x} = 1}` in the given direction.
    pub fn indicatrix_point(&self, t: f64, x: &Point, direction: &Vector) -> Result<Vector> {
        check_dims(x, direction)?;
        if direction.iter().all(|c| *c == 0.0) {
            return Err(Error::Argument(
                "indicatrix direction must be nonzero".into(),
            ));
        }
        let f = self.eval(t, x, direction)?;
        Ok(direction / f)
    }

    /// Samples unit directions and reports the smallest eigenvalue of `g` seen.
    pub fn strong_convexity_check(&self, t: f64, x: &Point, n_samples: usize) -> ConvexityReport {
        let n_samples = n_samples.max(8);
        let mut report = ConvexityReport {
            samples: 0,
            min_eigenvalue: f64::INFINITY,
            worst_direction: Vec::new(),
            passed: false,
            failure: None,
        };
        let directions = match sphere_directions(x.len(), n_samples) {
            Ok(d) => d,
            Err(e) => {
                report.failure = Some(e.to_string());
                return report;
            }
        };
        for dir in directions {
            match self.fundamental_tensor(t, x, &dir) {
                Ok(g) => {
                    let eig = g.0.symmetric_eigenvalues().min();
                    report.samples += 1;
                    if eig < report.min_eigenvalue || report.worst_direction.is_empty() {
                        report.min_eigenvalue = eig;
                        report.worst_direction = dir.as_slice().to_vec();
                    }
                }
                Err(e) => {
                    report.failure = Some(e.to_string());
                    break;
                }
            }
        }
        report.passed = report.failure.is_none() && report.min_eigenvalue > 0.0;
        report
    }
}

fn ensure_nonzero(v: &Vector) -> Result<()> {
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::Argument(
            "the fundamental tensor is undefined at the zero vector".into(),
        ));
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Fourth-order central first derivative at zero.
fn first_difference(mut f: impl FnMut(f64) -> Result<f64>, delta: f64) -> Result<f64> {
    let p1 = f(delta)?;
    let m1 = f(-delta)?;
    let p2 = f(2.0 * delta)?;
    let m2 = f(-2.0 * delta)?;
    Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * delta))
}

/// Orthonormal basis whose first column is the unit vector `u`.
fn orthonormal_frame(u: &Vector) -> DMatrix<f64> {
    let n = u.len();
    let mut cols: Vec<Vector> = vec![u.clone()];
    let skip = u.iamax();
    for k in (0..n).filter(|&k| k != skip) {
        let mut e = Vector::zeros(n);
        e[k] = 1.0;
        for c in &cols {
            e -= c * c.dot(&e);
        }
        cols.push(e.normalize());
    }
    DMatrix::from_columns(&cols)
}

/// Deterministic, roughly uniform unit directions.
fn sphere_directions(dim: usize, count: usize) -> Result<Vec<Vector>> {
    match dim {
        2 => Ok((0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                Vector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect()),
        3 => {
            // Fibonacci lattice.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            Ok((0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    Vector::from_vec(vec![r * a.cos(), r * a.sin(), z])
                })
                .collect())
        }
        _ => Err(Error::Argument(format!(
            "direction sampling is implemented for dimensions 2 and 3, got {dim}"
        ))),
    }
}
