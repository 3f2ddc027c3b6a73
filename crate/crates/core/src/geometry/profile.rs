//! Speed profiles `V(t, x, v)`: positive and 0-homogeneous in the direction `v`.

use std::fmt;

use nalgebra::DMatrix;

use super::field::{SharedField, SharedHeight};
use super::{Point, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Isotropic,
    Elliptical,
    Matsumoto,
    Custom,
}

/// Value, gradient and Hessian of a speed profile with respect to the direction `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedJet {
    pub value: f64,
    pub grad: Vector,
    pub hess: DMatrix<f64>,
}

pub trait SpeedProfile: Send + Sync {
    fn kind(&self) -> ProfileKind;

    fn speed(&self, t: f64, x: &Point, v: &Vector) -> Result<f64>;

    /// Closed-form direction derivatives, when the profile has them. Returning `None`
    /// makes every consumer fall back to finite differences.
    fn jet(&self, _t: f64, _x: &Point, _v: &Vector) -> Result<Option<SpeedJet>> {
        Ok(None)
    }
}

/// Direction-independent speed `c(t, x)`.
#[derive(Clone)]
pub struct Isotropic {
    pub speed: SharedField,
}

impl Isotropic {
    pub fn new(speed: SharedField) -> Self {
        Self { speed }
    }
}

impl fmt::Debug for Isotropic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Isotropic(..)")
    }
}

impl SpeedProfile for Isotropic {
    fn kind(&self) -> ProfileKind {
        ProfileKind::Isotropic
    }

    fn speed(&self, t: f64, x: &Point, _v: &Vector) -> Result<f64> {
        Ok(self.speed.value(t, x))
    }

    fn jet(&self, t: f64, x: &Point, v: &Vector) -> Result<Option<SpeedJet>> {
        let n = v.len();
        Ok(Some(SpeedJet {
            value: self.speed.value(t, x),
            grad: Vector::zeros(n),
            hess: DMatrix::zeros(n, n),
        }))
    }
}

/// Planar elliptical spread
/// `V(theta) = a (1 - eps^2) / (1 - eps cos(theta - phi))`: the indicatrix is an ellipse
/// with eccentricity `eps` and semi-major axis `a` along `phi`, with the origin at a focus.
#[derive(Clone)]
pub struct Elliptical {
    pub semi_major: SharedField,
    pub eccentricity: SharedField,
    pub heading: SharedField,
}

impl Elliptical {
    pub fn new(semi_major: SharedField, eccentricity: SharedField, heading: SharedField) -> Self {
        Self {
            semi_major,
            eccentricity,
            heading,
        }
    }

    fn coefficients(&self, t: f64, x: &Point, v: &Vector) -> Result<(f64, f64, f64)> {
        if v.len() != 2 {
            return Err(Error::Argument(format!(
                "elliptical profiles are planar, got dimension {}",
                v.len()
            )));
        }
        let a = self.semi_major.value(t, x);
        let eps = self.eccentricity.value(t, x);
        let phi = self.heading.value(t, x);
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Profile(format!(
                "eccentricity must satisfy 0 <= eps < 1, got {eps} at t = {t}, x = {:?}",
                x.as_slice()
            )));
        }
        if !(a > 0.0 && a.is_finite()) || !phi.is_finite() {
            return Err(Error::Profile(format!(
                "semi-major axis must be positive and finite, got a = {a}, phi = {phi}"
            )));
        }
        Ok((a, eps, phi))
    }
}

impl fmt::Debug for Elliptical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Elliptical(..)")
    }
}

impl SpeedProfile for Elliptical {
    fn kind(&self) -> ProfileKind {
        ProfileKind::Elliptical
    }

    fn speed(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        let (a, eps, phi) = self.coefficients(t, x, v)?;
        let theta = v[1].atan2(v[0]);
        Ok(a * (1.0 - eps * eps) / (1.0 - eps * (theta - phi).cos()))
    }

    fn jet(&self, t: f64, x: &Point, v: &Vector) -> Result<Option<SpeedJet>> {
        let (a, eps, phi) = self.coefficients(t, x, v)?;
        let theta = v[1].atan2(v[0]);
        let (s, c) = (theta - phi).sin_cos();
        let num = a * (1.0 - eps * eps);
        let den = 1.0 - eps * c;
        let d1 = eps * s;
        let d2 = eps * c;
        let value = num / den;
        let dv = -num * d1 / (den * den);
        let ddv = -num * (d2 / (den * den) - 2.0 * d1 * d1 / (den * den * den));
        Ok(Some(angular_jet(v, value, dv, ddv)))
    }
}

/// Chain rule from `V(theta)` to derivatives in `v`, with `theta = atan2(v2, v1)`.
fn angular_jet(v: &Vector, value: f64, dv: f64, ddv: f64) -> SpeedJet {
    let (v1, v2) = (v[0], v[1]);
    let r2 = v1 * v1 + v2 * v2;
    let r4 = r2 * r2;
    let th = [-v2 / r2, v1 / r2];
    let th2 = [
        [2.0 * v1 * v2 / r4, (v2 * v2 - v1 * v1) / r4],
        [(v2 * v2 - v1 * v1) / r4, -2.0 * v1 * v2 / r4],
    ];
    let grad = Vector::from_iterator(2, th.iter().map(|d| dv * d));
    let hess = DMatrix::from_fn(2, 2, |i, j| ddv * th[i] * th[j] + dv * th2[i][j]);
    SpeedJet { value, grad, hess }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeSign {
    /// Faster upslope.
    Uphill,
    /// Faster downslope.
    Downhill,
}

impl SlopeSign {
    fn factor(self) -> f64 {
        match self {
            SlopeSign::Uphill => 1.0,
            SlopeSign::Downhill => -1.0,
        }
    }
}

/// Slope-driven spread on the graph of `z`:
/// `V = b +/- c (v . grad z) / |v|_h` with `h` the metric induced on the graph.
#[derive(Clone)]
pub struct Matsumoto {
    pub base_speed: SharedField,
    pub slope_gain: SharedField,
    pub sign: SlopeSign,
    pub height: SharedHeight,
}

impl fmt::Debug for Matsumoto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matsumoto")
            .field("sign", &self.sign)
            .finish_non_exhaustive()
    }
}

struct MatsumotoTerms {
    b: f64,
    k: f64,
    grad_z: Vector,
    hv: Vector,
    h: DMatrix<f64>,
    q: f64,
    w: f64,
}

impl Matsumoto {
    pub fn new(
        base_speed: SharedField,
        slope_gain: SharedField,
        sign: SlopeSign,
        height: SharedHeight,
    ) -> Self {
        Self {
            base_speed,
            slope_gain,
            sign,
            height,
        }
    }

    fn terms(&self, t: f64, x: &Point, v: &Vector) -> Result<MatsumotoTerms> {
        let n = v.len();
        let b = self.base_speed.value(t, x);
        let c = self.slope_gain.value(t, x);
        if !(b > 0.0) || !(c >= 0.0) || !b.is_finite() || !c.is_finite() {
            return Err(Error::Profile(format!(
                "Matsumoto coefficients must satisfy b > 0, c >= 0; got b = {b}, c = {c}"
            )));
        }
        let grad_z = self.height.gradient(x);
        let h = DMatrix::identity(n, n) + &grad_z * grad_z.transpose();
        let hv = &h * v;
        let q = v.dot(&hv).sqrt();
        let w = v.dot(&grad_z);
        let k = self.sign.factor() * c;
        if b * q + k * w < 1e-9 * b * q {
            return Err(Error::Profile(format!(
                "Matsumoto denominator b|v|_h {} c (v . grad z) is not positive at x = {:?}",
                if k >= 0.0 { "+" } else { "-" },
                x.as_slice()
            )));
        }
        Ok(MatsumotoTerms {
            b,
            k,
            grad_z,
            hv,
            h,
            q,
            w,
        })
    }
}

impl SpeedProfile for Matsumoto {
    fn kind(&self) -> ProfileKind {
        ProfileKind::Matsumoto
    }

    fn speed(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        let m = self.terms(t, x, v)?;
        Ok(m.b + m.k * m.w / m.q)
    }

    fn jet(&self, t: f64, x: &Point, v: &Vector) -> Result<Option<SpeedJet>> {
        let MatsumotoTerms {
            b,
            k,
            grad_z,
            hv,
            h,
            q,
            w,
        } = self.terms(t, x, v)?;
        let n = v.len();
        let dq = &hv / q;
        let ddq = (&h - &dq * dq.transpose()) / q;
        let grad = (&grad_z / q - &dq * (w / (q * q))) * k;
        let q2 = q * q;
        let q3 = q2 * q;
        let hess = DMatrix::from_fn(n, n, |i, j| {
            k * (-grad_z[i] * dq[j] / q2 - grad_z[j] * dq[i] / q2 - w * ddq[(i, j)] / q2
                + 2.0 * w * dq[i] * dq[j] / q3)
        });
        Ok(Some(SpeedJet {
            value: b + k * w / q,
            grad,
            hess,
        }))
    }
}

/// Arbitrary user profile given as a closure; derivatives come from finite differences.
pub struct CustomProfile<V> {
    speed: V,
}

impl<V> CustomProfile<V>
where
    V: Fn(f64, &Point, &Vector) -> f64 + Send + Sync,
{
    pub fn new(speed: V) -> Self {
        Self { speed }
    }
}

impl<V> SpeedProfile for CustomProfile<V>
where
    V: Fn(f64, &Point, &Vector) -> f64 + Send + Sync,
{
    fn kind(&self) -> ProfileKind {
        ProfileKind::Custom
    }

    fn speed(&self, t: f64, x: &Point, v: &Vector) -> Result<f64> {
        Ok((self.speed)(t, x, v))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::field::{constant, from_fn, GaussianHill};
    use crate::geometry::{point, vector};

    fn central_jet(p: &dyn SpeedProfile, t: f64, x: &Point, v: &Vector) -> (Vector, DMatrix<f64>) {
        let n = v.len();
        let h = 1e-4;
        let s = |w: &Vector| p.speed(t, x, w).unwrap();
        let mut grad = Vector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = h;
            grad[i] = (s(&(v + &e)) - s(&(v - &e))) / (2.0 * h);
            for j in 0..n {
                let mut f = Vector::zeros(n);
                f[j] = h;
                hess[(i, j)] = (s(&(v + &e + &f)) - s(&(v + &e - &f)) - s(&(v - &e + &f))
                    + s(&(v - &e - &f)))
                    / (4.0 * h * h);
            }
        }
        (grad, hess)
    }

    fn sample_profiles() -> Vec<Box<dyn SpeedProfile>> {
        vec![
            Box::new(Isotropic::new(from_fn(|t, x| 1.0 + t + 0.1 * x[0]))),
            Box::new(Elliptical::new(
                constant(1.3),
                constant(0.6),
                from_fn(|_t, x| 0.4 * x[1]),
            )),
            Box::new(Matsumoto::new(
                constant(1.0),
                constant(0.4),
                SlopeSign::Uphill,
                Arc::new(GaussianHill::new(vec![0.0, 0.0], 0.8, 1.0)),
            )),
        ]
    }

    #[test]
    fn built_in_profiles_are_zero_homogeneous() {
        let x = point(&[0.3, -0.7]);
        let v = vector(&[0.8, 0.35]);
        for p in sample_profiles() {
            let base = p.speed(0.2, &x, &v).unwrap();
            for lambda in [1e-3, 0.5, 2.0, 1e3] {
                let scaled = p.speed(0.2, &x, &(&v * lambda)).unwrap();
                assert!(
                    (scaled - base).abs() <= 1e-12 * base,
                    "{:?} lambda={lambda}",
                    p.kind()
                );
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let x = point(&[0.3, -0.7]);
        for p in sample_profiles() {
            for v in [vector(&[0.8, 0.35]), vector(&[-0.2, -1.1])] {
                let jet = p.jet(0.2, &x, &v).unwrap().unwrap();
                let (grad, hess) = central_jet(p.as_ref(), 0.2, &x, &v);
                assert!((jet.value - p.speed(0.2, &x, &v).unwrap()).abs() < 1e-14);
                assert!((jet.grad - grad).amax() < 1e-7, "{:?}", p.kind());
                assert!((jet.hess - hess).amax() < 1e-5, "{:?}", p.kind());
            }
        }
    }

    #[test]
    fn elliptical_rejects_eccentricity_out_of_range() {
        let p = Elliptical::new(constant(1.0), constant(1.2), constant(0.0));
        let err = p
            .speed(0.0, &point(&[0.0, 0.0]), &vector(&[1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::Profile(_)));
    }

    #[test]
    fn elliptical_extremes() {
        let p = Elliptical::new(constant(1.0), constant(0.5), constant(0.0));
        let x = point(&[0.0, 0.0]);
        // Head of the ellipse: a (1 + eps); back: a (1 - eps).
        assert!((p.speed(0.0, &x, &vector(&[1.0, 0.0])).unwrap() - 1.5).abs() < 1e-15);
        assert!((p.speed(0.0, &x, &vector(&[-1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matsumoto_rejects_vanishing_denominator() {
        let p = Matsumoto::new(
            constant(1.0),
            constant(5.0),
            SlopeSign::Downhill,
            Arc::new(crate::geometry::field::Plane {
                slope: vec![1.0, 0.0],
            }),
        );
        let err = p
            .speed(0.0, &point(&[0.0, 0.0]), &vector(&[1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::Profile(_)));
    }

    #[test]
    fn matsumoto_uphill_is_faster_upslope() {
        let p = Matsumoto::new(
            constant(1.0),
            constant(0.3),
            SlopeSign::Uphill,
            Arc::new(crate::geometry::field::Plane {
                slope: vec![0.5, 0.0],
            }),
        );
        let x = point(&[0.0, 0.0]);
        let up = p.speed(0.0, &x, &vector(&[1.0, 0.0])).unwrap();
        let down = p.speed(0.0, &x, &vector(&[-1.0, 0.0])).unwrap();
        assert!(up > 1.0 && down < 1.0);
    }
}
