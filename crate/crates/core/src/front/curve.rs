//! Closed planar curves used as initial fronts and as epoch restarts.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{point, vector, Point, Vector};

/// A closed curve `alpha: [0, period) -> R^2` with its tangent.
pub trait ClosedCurve: Send + Sync {
    fn point(&self, theta: f64) -> Point;
    fn tangent(&self, theta: f64) -> Vector;
    fn period(&self) -> f64 {
        TAU
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl ClosedCurve for Circle {
    fn point(&self, theta: f64) -> Point {
        point(&[
            self.center[0] + self.radius * theta.cos(),
            self.center[1] + self.radius * theta.sin(),
        ])
    }

    fn tangent(&self, theta: f64) -> Vector {
        vector(&[-self.radius * theta.sin(), self.radius * theta.cos()])
    }
}

/// Star-shaped curve `center + r(theta) (cos theta, sin theta)`.
pub struct PolarCurve<R> {
    pub center: [f64; 2],
    radius: R,
    derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl<R> PolarCurve<R>
where
    R: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new<D>(center: [f64; 2], radius: R, derivative: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            center,
            radius,
            derivative: Box::new(derivative),
        }
    }
}

impl<R> ClosedCurve for PolarCurve<R>
where
    R: Fn(f64) -> f64 + Send + Sync,
{
    fn point(&self, theta: f64) -> Point {
        let r = (self.radius)(theta);
        point(&[
            self.center[0] + r * theta.cos(),
            self.center[1] + r * theta.sin(),
        ])
    }

    fn tangent(&self, theta: f64) -> Vector {
        let r = (self.radius)(theta);
        let dr = (self.derivative)(theta);
        let (s, c) = theta.sin_cos();
        vector(&[dr * c - r * s, dr * s + r * c])
    }
}

/// Two-lobe curve `r = 1 + lobe cos 2 theta`, concave around `theta = pi/2, 3pi/2`
/// once `lobe` exceeds 1/5.
pub fn peanut(
    center: [f64; 2],
    scale: f64,
    lobe: f64,
) -> PolarCurve<impl Fn(f64) -> f64 + Send + Sync> {
    PolarCurve::new(
        center,
        move |th: f64| scale * (1.0 + lobe * (2.0 * th).cos()),
        move |th: f64| -2.0 * scale * lobe * (2.0 * th).sin(),
    )
}

/// Periodic interpolating cubic spline through planar points, parametrized by
/// cumulative chord length.
#[derive(Clone, PartialEq)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    points: Vec<[f64; 2]>,
    second: Vec<[f64; 2]>,
}

impl fmt::Debug for PeriodicSpline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicSpline")
            .field("nodes", &self.points.len())
            .field("period", &self.period())
            .finish()
    }
}

impl PeriodicSpline {
    pub fn new(nodes: &[Point]) -> Result<Self> {
        let k = nodes.len();
        if k < 3 {
            return Err(Error::DegenerateFront(format!(
                "a closed spline needs at least 3 nodes, got {k}"
            )));
        }
        if let Some(p) = nodes.iter().find(|p| p.len() != 2) {
            return Err(Error::Argument(format!(
                "spline nodes must be planar, got dimension {}",
                p.len()
            )));
        }
        let points: Vec<[f64; 2]> = nodes.iter().map(|p| [p[0], p[1]]).collect();
        let mut h = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b) = (points[i], points[(i + 1) % k]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if !(len > 0.0) {
                return Err(Error::DegenerateFront(format!(
                    "spline nodes {i} and {} coincide",
                    (i + 1) % k
                )));
            }
            h.push(len);
        }
        let mut knots = vec![0.0; k + 1];
        for i in 0..k {
            knots[i + 1] = knots[i] + h[i];
        }
        let mut a = DMatrix::zeros(k, k);
        let mut rhs = DMatrix::zeros(k, 2);
        for i in 0..k {
            let prev = (i + k - 1) % k;
            let next = (i + 1) % k;
            a[(i, prev)] += h[prev];
            a[(i, i)] += 2.0 * (h[prev] + h[i]);
            a[(i, next)] += h[i];
            for c in 0..2 {
                rhs[(i, c)] = 6.0
                    * ((points[next][c] - points[i][c]) / h[i]
                        - (points[i][c] - points[prev][c]) / h[prev]);
            }
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular periodic spline system".into()))?;
        let second = (0..k).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
        Ok(Self {
            knots,
            points,
            second,
        })
    }

    pub fn nodes(&self) -> usize {
        self.points.len()
    }

    /// Parameter value of node `i`.
    pub fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    fn locate(&self, theta: f64) -> (usize, f64) {
        let s = theta.rem_euclid(self.period());
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => i.min(self.nodes() - 1),
            Err(i) => i - 1,
        };
        (i, s)
    }

    fn eval(&self, theta: f64) -> ([f64; 2], [f64; 2]) {
        let (i, s) = self.locate(theta);
        let j = (i + 1) % self.nodes();
        let h = self.knots[i + 1] - self.knots[i];
        let (a, b) = (self.knots[i + 1] - s, s - self.knots[i]);
        let mut p = [0.0; 2];
        let mut d = [0.0; 2];
        for c in 0..2 {
            let (mi, mj) = (self.second[i][c], self.second[j][c]);
            let ci = self.points[i][c] / h - mi * h / 6.0;
            let cj = self.points[j][c] / h - mj * h / 6.0;
            p[c] = (a.powi(3) * mi + b.powi(3) * mj) / (6.0 * h) + ci * a + cj * b;
            d[c] = (-3.0 * a * a * mi + 3.0 * b * b * mj) / (6.0 * h) - ci + cj;
        }
        (p, d)
    }
}

impl ClosedCurve for PeriodicSpline {
    fn point(&self, theta: f64) -> Point {
        let (p, _) = self.eval(theta);
        point(&p)
    }

    fn tangent(&self, theta: f64) -> Vector {
        let (_, d) = self.eval(theta);
        vector(&d)
    }

    fn period(&self) -> f64 {
        self.knots[self.nodes()]
    }
}

/// Which sign `det[v | alpha']` must have for `v` to point outward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    PositiveDeterminant,
    NegativeDeterminant,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::PositiveDeterminant => 1.0,
            Orientation::NegativeDeterminant => -1.0,
        }
    }
}

/// Parametrized closed initial front together with its outward orientation.
#[derive(Clone)]
pub struct FrontParametrization {
    curve: Arc<dyn ClosedCurve>,
    orientation: Orientation,
}

impl fmt::Debug for FrontParametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrontParametrization")
            .field("period", &self.period())
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl FrontParametrization {
    pub fn new(curve: Arc<dyn ClosedCurve>, orientation: Orientation) -> Self {
        Self { curve, orientation }
    }

    /// Orientation chosen from the signed area so that launches point away from
    /// the enclosed region.
    pub fn from_curve(curve: Arc<dyn ClosedCurve>) -> Self {
        let samples: Vec<Point> = (0..512)
            .map(|k| curve.point(curve.period() * k as f64 / 512.0))
            .collect();
        let orientation = if signed_area(&samples) >= 0.0 {
            Orientation::PositiveDeterminant
        } else {
            Orientation::NegativeDeterminant
        };
        Self { curve, orientation }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Argument(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Self::new(
            Arc::new(Circle { center, radius }),
            Orientation::PositiveDeterminant,
        ))
    }

    /// Smooth closed front through the polygon vertices.
    pub fn polygon(vertices: &[Point]) -> Result<Self> {
        Ok(Self::from_curve(Arc::new(PeriodicSpline::new(vertices)?)))
    }

    pub fn peanut(center: [f64; 2], scale: f64, lobe: f64) -> Result<Self> {
        if !(scale > 0.0) || !(0.0..1.0).contains(&lobe) {
            return Err(Error::Argument(format!(
                "peanut needs scale > 0 and 0 <= lobe < 1, got {scale}, {lobe}"
            )));
        }
        Ok(Self::new(
            Arc::new(peanut(center, scale, lobe)),
            Orientation::PositiveDeterminant,
        ))
    }

    pub fn curve(&self) -> &dyn ClosedCurve {
        self.curve.as_ref()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn period(&self) -> f64 {
        self.curve.period()
    }

    pub fn alpha(&self, theta: f64) -> Point {
        self.curve.point(theta)
    }

    pub fn tangent(&self, theta: f64) -> Vector {
        self.curve.tangent(theta)
    }
}

/// Shoelace area of a closed polygon; positive for counterclockwise vertices.
pub fn signed_area(points: &[Point]) -> f64 {
    let k = points.len();
    0.5 * (0..k)
        .map(|i| {
            let (a, b) = (&points[i], &points[(i + 1) % k]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Helper for tests and presets: evenly spaced samples of a curve.
pub fn sample_curve(curve: &dyn ClosedCurve, count: usize) -> Vec<Point> {
    (0..count)
        .map(|k| curve.point(curve.period() * k as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_tangent_is_derivative() {
        let c = Circle {
            center: [0.5, -1.0],
            radius: 2.0,
        };
        for th in [0.0, 1.0, 4.0] {
            let d = (c.point(th + 1e-6) - c.point(th - 1e-6)) / 2e-6;
            assert!((d - c.tangent(th)).amax() < 1e-8);
        }
    }

    #[test]
    fn peanut_is_concave_at_the_waist() {
        let p = peanut([0.0, 0.0], 1.0, 0.6);
        let th = std::f64::consts::FRAC_PI_2;
        let d = (p.point(th + 1e-6) - p.point(th - 1e-6)) / 2e-6;
        assert!((d - p.tangent(th)).amax() < 1e-8);
        // Curvature sign of a polar curve: r^2 + 2 r'^2 - r r''.
        let (r, ddr) = (0.4, 2.4);
        assert!(r * r - r * ddr < 0.0);
        assert!((p.point(th)[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn spline_interpolates_nodes_and_closes() {
        let nodes = sample_curve(
            &Circle {
                center: [0.0, 0.0],
                radius: 1.5,
            },
            64,
        );
        let s = PeriodicSpline::new(&nodes).unwrap();
        for (i, n) in nodes.iter().enumerate() {
            assert!((s.point(s.knot(i)) - n).amax() < 1e-12);
        }
        assert!((s.point(s.period()) - &nodes[0]).amax() < 1e-12);
        for k in 0..500 {
            let th = s.period() * (k as f64 + 0.37) / 500.0;
            assert!((s.point(th).norm() - 1.5).abs() < 1e-6);
            let d = (s.point(th + 1e-7) - s.point(th - 1e-7)) / 2e-7;
            assert!((d - s.tangent(th)).amax() < 1e-6);
        }
    }

    #[test]
    fn spline_rejects_degenerate_nodes() {
        let p = point(&[0.0, 0.0]);
        assert!(matches!(
            PeriodicSpline::new(&[p.clone(), point(&[1.0, 0.0])]),
            Err(Error::DegenerateFront(_))
        ));
        assert!(matches!(
            PeriodicSpline::new(&[p.clone(), p.clone(), point(&[1.0, 0.0])]),
            Err(Error::DegenerateFront(_))
        ));
    }

    #[test]
    fn orientation_follows_signed_area() {
        let ccw = vec![
            point(&[0.0, 0.0]),
            point(&[1.0, 0.0]),
            point(&[1.0, 1.0]),
            point(&[0.0, 1.0]),
        ];
        let cw: Vec<Point> = ccw.iter().rev().cloned().collect();
        assert_eq!(signed_area(&ccw), 1.0);
        assert_eq!(
            FrontParametrization::polygon(&ccw).unwrap().orientation(),
            Orientation::PositiveDeterminant
        );
        assert_eq!(
            FrontParametrization::polygon(&cw).unwrap().orientation(),
            Orientation::NegativeDeterminant
        );
    }
}
