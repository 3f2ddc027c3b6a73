//! Scalar fields over space-time and terrain height functions.

use std::fmt;
use std::sync::Arc;

use super::{Point, Vector};

/// A smooth scalar function of time and position, e.g. a speed coefficient.
pub trait ScalarField: Send + Sync {
    fn value(&self, t: f64, x: &Point) -> f64;
}

pub type SharedField = Arc<dyn ScalarField>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl ScalarField for ConstantField {
    fn value(&self, _t: f64, _x: &Point) -> f64 {
        self.0
    }
}

/// Adapts a closure `(t, x) -> value`.
pub struct FnField<F>(pub F);

impl<F> ScalarField for FnField<F>
where
    F: Fn(f64, &Point) -> f64 + Send + Sync,
{
    fn value(&self, t: f64, x: &Point) -> f64 {
        (self.0)(t, x)
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnField(..)")
    }
}

pub fn constant(value: f64) -> SharedField {
    Arc::new(ConstantField(value))
}

pub fn from_fn<F>(f: F) -> SharedField
where
    F: Fn(f64, &Point) -> f64 + Send + Sync + 'static,
{
    Arc::new(FnField(f))
}

/// Height `z(x)` of a terrain given as a graph over the coordinate patch.
pub trait HeightFunction: Send + Sync {
    fn height(&self, x: &Point) -> f64;

    /// Gradient of the height. The default uses central differences; implementors with
    /// closed forms should override it, since the gradient is differentiated again when
    /// Christoffel symbols are formed.
    fn gradient(&self, x: &Point) -> Vector {
        central_gradient(|p| self.height(p), x)
    }
}

pub(crate) fn central_gradient(f: impl Fn(&Point) -> f64, x: &Point) -> Vector {
    let mut grad = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

pub type SharedHeight = Arc<dyn HeightFunction>;

/// `z(x) = amplitude * exp(-|x - center|^2 / width^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHill {
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianHill {
    pub fn new(center: Vec<f64>, amplitude: f64, width: f64) -> Self {
        Self {
            center,
            amplitude,
            width,
        }
    }

    fn offset_sq(&self, x: &Point) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci).powi(2))
            .sum()
    }
}

impl HeightFunction for GaussianHill {
    fn height(&self, x: &Point) -> f64 {
        self.amplitude * (-self.offset_sq(x) / self.width.powi(2)).exp()
    }

    fn gradient(&self, x: &Point) -> Vector {
        let z = self.height(x);
        let scale = -2.0 * z / self.width.powi(2);
        Vector::from_iterator(
            x.len(),
            x.iter().zip(&self.center).map(|(xi, ci)| scale * (xi - ci)),
        )
    }
}

/// Inclined plane `z(x) = slope . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub slope: Vec<f64>,
}

impl HeightFunction for Plane {
    fn height(&self, x: &Point) -> f64 {
        x.iter().zip(&self.slope).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, x: &Point) -> Vector {
        Vector::from_iterator(x.len(), self.slope.iter().copied())
    }
}

type GradientFn = Box<dyn Fn(&Point) -> Vector + Send + Sync>;

/// Height given by a closure, with an optional closed-form gradient.
pub struct FnHeight<Z> {
    height: Z,
    gradient: Option<GradientFn>,
}

impl<Z> FnHeight<Z>
where
    Z: Fn(&Point) -> f64 + Send + Sync,
{
    pub fn new(height: Z) -> Self {
        Self {
            height,
            gradient: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Point) -> Vector + Send + Sync + 'static,
    {
        self.gradient = Some(Box::new(gradient));
        self
    }
}

impl<Z> HeightFunction for FnHeight<Z>
where
    Z: Fn(&Point) -> f64 + Send + Sync,
{
    fn height(&self, x: &Point) -> f64 {
        (self.height)(x)
    }

    fn gradient(&self, x: &Point) -> Vector {
        match &self.gradient {
            Some(g) => g(x),
            None => central_gradient(&self.height, x),
        }
    }
}
