use std::fmt;

use nalgebra::DMatrix;

use super::field::SharedHeight;
use super::{Point, Vector};
use crate::error::{Error, Result};

/// Riemannian metric `h` measuring actual distances on the coordinate patch.
#[derive(Clone)]
pub enum RiemannianMetric {
    Euclidean,
    /// Metric induced on the graph `(x, z(x))` by the ambient Euclidean metric:
    /// `h = I + grad z grad z^T`.
    GraphSurface(SharedHeight),
}

impl fmt::Debug for RiemannianMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiemannianMetric::Euclidean => f.write_str("Euclidean"),
            RiemannianMetric::GraphSurface(_) => f.write_str("GraphSurface(..)"),
        }
    }
}

impl RiemannianMetric {
    pub fn matrix(&self, x: &Point) -> Result<DMatrix<f64>> {
        let n = x.len();
        let m = match self {
            RiemannianMetric::Euclidean => DMatrix::identity(n, n),
            RiemannianMetric::GraphSurface(z) => {
                let grad = z.gradient(x);
                if grad.len() != n {
                    return Err(Error::Domain(format!(
                        "height gradient has {} components at a point of dimension {n}",
                        grad.len()
                    )));
                }
                DMatrix::identity(n, n) + &grad * grad.transpose()
            }
        };
        if m.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite metric entries at x = {:?}",
                x.as_slice()
            )));
        }
        Ok(m)
    }

    /// `h_x(v, u)`.
    pub fn inner(&self, x: &Point, v: &Vector, u: &Vector) -> Result<f64> {
        check_dims(x, v)?;
        check_dims(x, u)?;
        match self {
            RiemannianMetric::Euclidean => Ok(v.dot(u)),
            RiemannianMetric::GraphSurface(_) => {
                let h = self.matrix(x)?;
                Ok(v.dot(&(h * u)))
            }
        }
    }

    pub fn norm(&self, x: &Point, v: &Vector) -> Result<f64> {
        Ok(self.inner(x, v, v)?.max(0.0).sqrt())
    }
}

pub(crate) fn check_dims(x: &Point, v: &Vector) -> Result<()> {
    if x.len() != v.len() {
        return Err(Error::Argument(format!(
            "vector of dimension {} at a point of dimension {}",
            v.len(),
            x.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument(format!(
            "space dimension must be at least 2, got {}",
            x.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::field::{FnHeight, Plane};
    use crate::geometry::{point, vector};

    #[test]
    fn euclidean_dot_product() {
        let h = RiemannianMetric::Euclidean;
        let x = point(&[0.3, -1.0]);
        let v = vector(&[3.0, 4.0]);
        assert_eq!(h.inner(&x, &v, &v).unwrap(), 25.0);
    }

    #[test]
    fn flat_graph_is_identity() {
        let h = RiemannianMetric::GraphSurface(Arc::new(FnHeight::new(|_x: &Point| 7.5)));
        let x = point(&[2.0, -3.0]);
        let m = h.matrix(&x).unwrap();
        assert!((m - DMatrix::<f64>::identity(2, 2)).amax() < 1e-9);
        let r = h
            .inner(&x, &vector(&[1.0, 0.0]), &vector(&[0.0, 1.0]))
            .unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn inclined_graph_stretches_slope_direction() {
        let h = RiemannianMetric::GraphSurface(Arc::new(Plane {
            slope: vec![1.0, 0.0],
        }));
        let x = point(&[0.5, 0.5]);
        let e1 = vector(&[1.0, 0.0]);
        assert_eq!(h.inner(&x, &e1, &e1).unwrap(), 2.0);
        let e2 = vector(&[0.0, 1.0]);
        assert_eq!(h.inner(&x, &e1, &e2).unwrap(), 0.0);
        assert_eq!(
            h.inner(&x, &e1, &e2).unwrap(),
            h.inner(&x, &e2, &e1).unwrap()
        );
    }

    #[test]
    fn non_finite_height_is_a_domain_error() {
        let h = RiemannianMetric::GraphSurface(Arc::new(
            FnHeight::new(|_x: &Point| 0.0).with_gradient(|_x| vector(&[f64::NAN, 0.0])),
        ));
        let err = h.matrix(&point(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
