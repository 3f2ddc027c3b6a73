//! Base metrics, speed profiles and the induced time-dependent Finsler metric.

mod base;
pub mod field;
mod finsler;
mod profile;

use nalgebra::DVector;

pub use base::RiemannianMetric;
pub use field::{
    ConstantField, FnField, FnHeight, GaussianHill, HeightFunction, Plane, ScalarField,
    SharedField, SharedHeight,
};
pub use finsler::{ConvexityReport, FdConfig, FinslerMetric, FundamentalTensor};
pub use profile::{
    CustomProfile, Elliptical, Isotropic, Matsumoto, ProfileKind, SlopeSign, SpeedJet, SpeedProfile,
};

/// Position `x = (x^1, ..., x^n)` in the coordinate patch.
pub type Point = DVector<f64>;
/// Tangent vector `v = (v^1, ..., v^n)`.
pub type Vector = DVector<f64>;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

pub fn vector(comps: &[f64]) -> Vector {
    DVector::from_column_slice(comps)
}
