//! The Lorentz-Finsler metric `G = (v0)^2 - F^2` on space-time and its geodesic equations.
//!
//! Coordinates on space-time are `(x^0, ..., x^n) = (t, x^1, ..., x^n)`. All coordinate
//! partials of fundamental tensors are taken at a fixed direction by central differences
//! with step `coord_rel_step * max(1, |coordinate|)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{FinslerMetric, Point, Vector};

/// Condition number (1-norm) above which a fundamental tensor is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Spatial speeds below this norm make `G` non-smooth; evaluation refuses them.
pub const MIN_SPATIAL_SPEED: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Point,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: Point) -> Self {
        Self { t, x }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeVector {
    pub v0: f64,
    pub v: Vector,
}

impl SpacetimeVector {
    pub fn new(v0: f64, v: Vector) -> Self {
        Self { v0, v }
    }

    pub fn to_coords(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.v.len() + 1);
        out[0] = self.v0;
        out.rows_mut(1, self.v.len()).copy_from(&self.v);
        out
    }
}

/// `G_p(v0, v) = (v0)^2 - F_p(v)^2`.
pub fn lorentz_finsler(
    f: &FinslerMetric,
    p: &SpacetimePoint,
    vhat: &SpacetimeVector,
) -> Result<f64> {
    let fv = f.eval(p.t, &p.x, &vhat.v)?;
    Ok(vhat.v0 * vhat.v0 - fv * fv)
}

/// The unique `v0 > 0` making `(v0, v)` lightlike, i.e. `F_{t,x}(v)`.
pub fn lightlike_lift(f: &FinslerMetric, t: f64, x: &Point, v: &Vector) -> Result<f64> {
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::Argument(
            "the zero vector has no lightlike lift".into(),
        ));
    }
    f.eval(t, x, v)
}

/// Coordinates of the fundamental tensor of `G`: `diag(1, -g^F_v)`.
pub fn lorentz_tensor(
    f: &FinslerMetric,
    p: &SpacetimePoint,
    vhat: &SpacetimeVector,
) -> Result<DMatrix<f64>> {
    let g = f.fundamental_tensor(p.t, &p.x, &vhat.v)?;
    Ok(block_lorentz(g.matrix()))
}

fn block_lorentz(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out[(0, 0)] = 1.0;
    out.view_mut((1, 1), (n, n)).copy_from(&(-g));
    out
}

/// Formal Christoffel symbols `gamma^k_ij`, stored densely and symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSymbols {
    dim: usize,
    data: Vec<f64>,
}

impl ChristoffelSymbols {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `gamma^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = value;
    }

    /// `gamma^k_ij u^i u^j` for each `k`.
    pub fn contract(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| {
            let mut acc = 0.0;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc += self.get(k, i, j) * u[i] * u[j];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fundamental tensor of `F` at `(t, x, v)` with its inverse and coordinate partials.
#[derive(Debug, Clone)]
pub struct TensorPartials {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub condition: f64,
    /// `d g / d t`.
    pub dt: DMatrix<f64>,
    /// `d g / d x^mu`, one matrix per spatial coordinate.
    pub dx: Vec<DMatrix<f64>>,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|e| e.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts a fundamental tensor, failing when it is (numerically) singular.
pub fn invert_tensor(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let inv = g.clone().try_inverse().ok_or_else(|| {
        Error::Numerical(format!("singular fundamental tensor {:?}", g.as_slice()))
    })?;
    let condition = one_norm(g) * one_norm(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "fundamental tensor is ill-conditioned (condition number {condition:.3e})"
        )));
    }
    Ok((inv, condition))
}

fn central_partial(
    coord: f64,
    rel_step: f64,
    richardson: bool,
    eval: impl Fn(f64) -> Result<DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let h = rel_step * coord.abs().max(1.0);
    let diff =
        |h: f64| -> Result<DMatrix<f64>> { Ok((eval(coord + h)? - eval(coord - h)?) / (2.0 * h)) };
    let coarse = diff(h)?;
    if !richardson {
        return Ok(coarse);
    }
    let fine = diff(0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

pub fn tensor_partials(f: &FinslerMetric, t: f64, x: &Point, v: &Vector) -> Result<TensorPartials> {
    if v.norm() < MIN_SPATIAL_SPEED {
        return Err(Error::Numerical(format!(
            "spatial velocity {:?} is too small; G is not smooth there",
            v.as_slice()
        )));
    }
    let fd = *f.fd();
    let g = f.fundamental_tensor(t, x, v)?.into_matrix();
    let (g_inv, condition) = invert_tensor(&g)?;
    let dt = central_partial(t, fd.coord_rel_step, fd.richardson, |s| {
        Ok(f.fundamental_tensor(s, x, v)?.into_matrix())
    })?;
    let mut dx = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for mu in 0..x.len() {
        let d = central_partial(x[mu], fd.coord_rel_step, fd.richardson, |s| {
            let mut p = probe.clone();
            p[mu] = s;
            Ok(f.fundamental_tensor(t, &p, v)?.into_matrix())
        })?;
        probe[mu] = x[mu];
        dx.push(d);
    }
    Ok(TensorPartials {
        g,
        g_inv,
        condition,
        dt,
        dx,
    })
}

/// `gamma^k_ij = 1/2 g^kr (d_i g_rj + d_j g_ri - d_r g_ij)` from a metric inverse and
/// the coordinate partials `partials[r] = d g / d x^r`.
fn christoffel_from(inv: &DMatrix<f64>, partials: &[DMatrix<f64>]) -> ChristoffelSymbols {
    let d = inv.nrows();
    let mut out = ChristoffelSymbols::zeros(d);
    for i in 0..d {
        for j in i..d {
            let lowered = DVector::from_fn(d, |r, _| {
                partials[i][(r, j)] + partials[j][(r, i)] - partials[r][(i, j)]
            });
            let raised = inv * lowered * 0.5;
            for k in 0..d {
                out.set(k, i, j, raised[k]);
                out.set(k, j, i, raised[k]);
            }
        }
    }
    out
}

/// Formal Christoffel symbols of `F` (spatial indices only) at `(t, x, v)`.
pub fn christoffel_spatial(
    f: &FinslerMetric,
    t: f64,
    x: &Point,
    v: &Vector,
) -> Result<ChristoffelSymbols> {
    let parts = tensor_partials(f, t, x, v)?;
    Ok(christoffel_from(&parts.g_inv, &parts.dx))
}

/// Formal Christoffel symbols of `G` at `(p, vhat)`; indices run over `0..=n`.
pub fn christoffel_spacetime(
    f: &FinslerMetric,
    p: &SpacetimePoint,
    vhat: &SpacetimeVector,
) -> Result<ChristoffelSymbols> {
    let parts = tensor_partials(f, p.t, &p.x, &vhat.v)?;
    let ghat = block_lorentz(&parts.g);
    let inv = block_lorentz(&parts.g_inv);
    let n = parts.g.nrows();
    // The (0,0) entry of the Lorentz tensor is constant, so only the spatial block varies.
    let lift = |m: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n + 1, n + 1);
        out.view_mut((1, 1), (n, n)).copy_from(&(-m));
        out
    };
    let mut partials = Vec::with_capacity(n + 1);
    partials.push(lift(&parts.dt));
    partials.extend(parts.dx.iter().map(lift));
    debug_assert_eq!(ghat.nrows(), n + 1);
    Ok(christoffel_from(&inv, &partials))
}

/// Acceleration of a time-parametrized wave trajectory `sigma(t)`:
///
/// `sigma''^xi = -g^{xi mu} dg_{mu nu}/dt sigma'^nu - gamma^xi_{mu nu} sigma'^mu sigma'^nu
///               + 1/2 dg_{mu nu}/dt sigma'^mu sigma'^nu sigma'^xi`
///
/// with `g`, `gamma` the fundamental tensor and formal Christoffel symbols of `F` at
/// `(t, sigma, sigma')`.
pub fn pregeodesic_rhs(
    f: &FinslerMetric,
    t: f64,
    sigma: &Point,
    sigmadot: &Vector,
) -> Result<Vector> {
    let parts = tensor_partials(f, t, sigma, sigmadot)?;
    Ok(pregeodesic_acceleration(&parts, sigmadot))
}

pub(crate) fn pregeodesic_acceleration(parts: &TensorPartials, u: &Vector) -> Vector {
    let n = u.len();
    // gamma^xi_{mu nu} u^mu u^nu = g^{xi zeta} (u^mu (d_mu g u)_zeta - 1/2 u^T (d_zeta g) u)
    let mut lowered = Vector::zeros(n);
    for mu in 0..n {
        lowered += (&parts.dx[mu] * u) * u[mu];
    }
    for zeta in 0..n {
        lowered[zeta] -= 0.5 * u.dot(&(&parts.dx[zeta] * u));
    }
    let dt_u = &parts.dt * u;
    let time_rate = 0.5 * u.dot(&dt_u);
    -(&parts.g_inv * (dt_u + lowered)) + u * time_rate
}

/// Affinely parametrized geodesic acceleration `gamma''^k = -gamma^k_ij gamma'^i gamma'^j`.
pub fn geodesic_rhs_affine(
    f: &FinslerMetric,
    gamma: &SpacetimePoint,
    gammadot: &SpacetimeVector,
) -> Result<SpacetimeVector> {
    let symbols = christoffel_spacetime(f, gamma, gammadot)?;
    let acc = -symbols.contract(&gammadot.to_coords());
    let n = gammadot.v.len();
    Ok(SpacetimeVector {
        v0: acc[0],
        v: acc.rows(1, n).into_owned(),
    })
}
