//! Wave ray tracing in time-, position- and direction-dependent media.
//!
//! A speed profile `V(t, x, v)` induces the time-dependent Finsler metric
//! `F = |v|_h / V` and the Lorentz-Finsler metric `G = (v0)^2 - F^2` on space-time.
//! Wave rays are the time-parametrized lightlike pregeodesics of `G`; fronts are
//! assembled from the rays that are still time-minimizing.
//!
//! - [`geometry`]: base metrics, speed profiles, `F` and its fundamental tensor.
//! - [`spacetime`]: `G`, formal Christoffel symbols and the geodesic right-hand sides.
//! - [`integrator`]: fixed-step RK4 wave trajectories.
//! - [`front`]: orthogonal launch, wavemaps, cut-point filtering and front interpolation.
//! - [`oracle`]: independent traveltime and Fermat-principle checks.

pub mod error;
pub mod front;
pub mod geometry;
pub mod integrator;
pub mod oracle;
pub mod spacetime;

pub use error::{Error, ErrorCategory, Result};
