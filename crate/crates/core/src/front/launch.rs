//! Launch parameters and the orthogonal outward launch velocity.

use std::f64::consts::TAU;

use super::curve::FrontParametrization;
use crate::error::{Error, Result};
use crate::geometry::{vector, FinslerMetric, Vector};

/// Smallest sample count accepted by [`sample_front`].
pub const MIN_SAMPLES: usize = 4;
/// Angular grid used to bracket the roots of the orthogonality function.
pub const ROOT_GRID: usize = 256;
/// Bisection stops once the bracket is this narrow in angle.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Uniform launch parameters `theta_l = period * l / m`.
pub fn sample_front(fp: &FrontParametrization, m: usize) -> Result<Vec<f64>> {
    if m < MIN_SAMPLES {
        return Err(Error::Configuration(format!(
            "at least {MIN_SAMPLES} front samples are required, got {m}"
        )));
    }
    let period = fp.period();
    Ok((0..m).map(|l| period * l as f64 / m as f64).collect())
}

/// Outcome of the orthogonal launch problem at one front point.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchVelocity {
    pub velocity: Vector,
    /// `|g_v(v, alpha')|` at the returned root.
    pub orthogonality_residual: f64,
    /// `|F(v) - 1|`.
    pub unit_residual: f64,
    /// Number of `F`-orthogonal directions found.
    pub roots: usize,
}

/// `F`-unit velocity at `alpha(theta)` that is `g_v`-orthogonal to the front and
/// points to the side selected by the parametrization's orientation.
pub fn orthogonal_outward_velocity(
    f: &FinslerMetric,
    t0: f64,
    fp: &FrontParametrization,
    theta: f64,
) -> Result<LaunchVelocity> {
    let x = fp.alpha(theta);
    if x.len() != 2 {
        return Err(Error::Argument(format!(
            "orthogonal launch is implemented for planar fronts only, got dimension {}",
            x.len()
        )));
    }
    let tangent = fp.tangent(theta);
    let tnorm = tangent.norm();
    if !(tnorm > 0.0) || !tnorm.is_finite() {
        return Err(Error::Geometry(format!(
            "degenerate tangent at theta = {theta}"
        )));
    }
    let unit_tangent = &tangent / tnorm;
    let indicatrix = |psi: f64| f.indicatrix_point(t0, &x, &vector(&[psi.cos(), psi.sin()]));
    let phi = |psi: f64| -> Result<f64> {
        let w = indicatrix(psi)?;
        Ok(f.half_gradient_f2(t0, &x, &w)?.dot(&unit_tangent))
    };

    // Offset the grid by half a cell so symmetric roots do not sit on nodes.
    let cell = TAU / ROOT_GRID as f64;
    let grid: Vec<f64> = (0..=ROOT_GRID).map(|k| (k as f64 + 0.5) * cell).collect();
    let values = grid.iter().map(|&p| phi(p)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for k in 0..ROOT_GRID {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 {
            roots.push(grid[k]);
        } else if a * b < 0.0 {
            roots.push(bisect(&phi, grid[k], grid[k + 1], a)?);
        }
    }
    if roots.is_empty() {
        return Err(Error::Geometry(format!(
            "no F-orthogonal direction at theta = {theta}; the indicatrix is not strongly convex"
        )));
    }
    let sign = fp.orientation().sign();
    let mut outward = Vec::new();
    for &psi in &roots {
        let v = indicatrix(psi)?;
        let det = v[0] * tangent[1] - v[1] * tangent[0];
        if det * sign > 0.0 {
            outward.push((psi, v));
        }
    }
    let (_, velocity) = match outward.len() {
        1 => outward.pop().unwrap(),
        0 => {
            return Err(Error::Geometry(format!(
                "all {} orthogonal directions at theta = {theta} lie on the same side",
                roots.len()
            )))
        }
        n => {
            return Err(Error::Geometry(format!(
                "{n} outward orthogonal directions at theta = {theta}; expected exactly one"
            )))
        }
    };
    let orthogonality_residual = f.half_gradient_f2(t0, &x, &velocity)?.dot(&tangent).abs();
    let unit_residual = (f.eval(t0, &x, &velocity)? - 1.0).abs();
    Ok(LaunchVelocity {
        velocity,
        orthogonality_residual,
        unit_residual,
        roots: roots.len(),
    })
}

fn bisect(
    phi: &impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
) -> Result<f64> {
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let fm = phi(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::front::curve::{Circle, Orientation};
    use crate::geometry::field::{constant, from_fn};

    fn unit_circle() -> FrontParametrization {
        FrontParametrization::circle([0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn samples_are_uniform() {
        let th = sample_front(&unit_circle(), 4).unwrap();
        let q = std::f64::consts::FRAC_PI_2;
        assert_eq!(th, vec![0.0, q, 2.0 * q, 3.0 * q]);
        let th = sample_front(&unit_circle(), 64).unwrap();
        assert!(th.windows(2).all(|w| w[1] > w[0]));
        assert!(*th.last().unwrap() < TAU);
        assert!(matches!(
            sample_front(&unit_circle(), 3),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn isotropic_launch_is_radial() {
        let f = FinslerMetric::isotropic(constant(3.0));
        let l = orthogonal_outward_velocity(&f, 0.0, &unit_circle(), 0.0).unwrap();
        assert!((l.velocity - vector(&[3.0, 0.0])).amax() < 1e-10);
        assert_eq!(l.roots, 2);
        for th in [0.4, 2.0, 5.5] {
            let l = orthogonal_outward_velocity(&f, 0.0, &unit_circle(), th).unwrap();
            let radial = vector(&[th.cos(), th.sin()]) * 3.0;
            assert!((l.velocity - radial).amax() < 1e-10);
        }
    }

    #[test]
    fn reversed_orientation_launches_inward() {
        let f = FinslerMetric::isotropic(constant(1.0));
        let fp = FrontParametrization::new(
            Arc::new(Circle {
                center: [0.0, 0.0],
                radius: 1.0,
            }),
            Orientation::NegativeDeterminant,
        );
        let l = orthogonal_outward_velocity(&f, 0.0, &fp, 0.0).unwrap();
        assert!((l.velocity - vector(&[-1.0, 0.0])).amax() < 1e-10);
    }

    #[test]
    fn random_elliptical_media_have_two_orthogonal_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (a, eps, phi0) = (
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.0..0.9),
                rng.gen_range(-3.0..3.0),
            );
            let f = FinslerMetric::elliptical(
                constant(a),
                from_fn(move |_t, x| eps * (1.0 - 0.1 * x[0].sin().powi(2))),
                from_fn(move |t, x| phi0 + 0.5 * x[1] + t),
            );
            let fp = FrontParametrization::circle([0.1, -0.2], rng.gen_range(0.2..2.0)).unwrap();
            let theta = rng.gen_range(0.0..TAU);
            let l = orthogonal_outward_velocity(&f, 0.3, &fp, theta).unwrap();
            assert_eq!(l.roots, 2);
            assert!(
                l.orthogonality_residual <= 1e-9,
                "{}",
                l.orthogonality_residual
            );
            assert!(l.unit_residual <= 1e-12);
            let t = fp.tangent(theta);
            assert!(l.velocity[0] * t[1] - l.velocity[1] * t[0] > 0.0);
        }
    }

    #[test]
    fn tangent_rescaling_does_not_move_the_root() {
        let f = FinslerMetric::elliptical(constant(1.0), constant(0.6), constant(0.4));
        let small = FrontParametrization::circle([0.0, 0.0], 1.0).unwrap();
        struct Doubled(Circle);
        impl crate::front::curve::ClosedCurve for Doubled {
            fn point(&self, theta: f64) -> crate::geometry::Point {
                self.0.point(theta)
            }
            fn tangent(&self, theta: f64) -> Vector {
                self.0.tangent(theta) * 2.0
            }
        }
        let big = FrontParametrization::new(
            Arc::new(Doubled(Circle {
                center: [0.0, 0.0],
                radius: 1.0,
            })),
            Orientation::PositiveDeterminant,
        );
        for th in [0.2, 1.9, 4.0] {
            let a = orthogonal_outward_velocity(&f, 0.0, &small, th).unwrap();
            let b = orthogonal_outward_velocity(&f, 0.0, &big, th).unwrap();
            assert!((a.velocity - b.velocity).amax() < 1e-10);
        }
    }

    #[test]
    fn missing_roots_are_geometry_errors() {
        // A non-convex four-petal indicatrix produces extra orthogonal directions.
        let f = FinslerMetric::new(
            crate::geometry::RiemannianMetric::Euclidean,
            Arc::new(crate::geometry::CustomProfile::new(
                |_t, _x: &crate::geometry::Point, v: &Vector| {
                    1.0 + 0.9 * (4.0 * v[1].atan2(v[0])).cos()
                },
            )),
        );
        let err = orthogonal_outward_velocity(&f, 0.0, &unit_circle(), 0.3).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }
}
