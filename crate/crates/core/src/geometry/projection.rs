use super::metric::MetricMatrix;
use super::mnp::min_norm_point;
use super::polytope::ConvexPolytope;
use crate::error::{Error, Result};

/// Nearest point of a polytope under an `A`-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    /// `|x - point|_A`
    pub distance: f64,
    /// Convex weights over the polytope's vertices; `point` is their combination.
    pub weights: Vec<f64>,
}

/// Projects `x` onto `hull` in the metric `<v, w>_A = v . A w`.
///
/// With `A = L L^T`, the map `y -> L^T (y - x)` turns the problem into a
/// Euclidean minimum-norm-point problem over the transformed vertices. The
/// optimal weights are then applied to the original vertices.
pub fn metric_project(x: &[f64], hull: &ConvexPolytope, metric: &MetricMatrix) -> Result<ProjectionResult> {
    let dim = hull.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    if metric.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: metric.dim() });
    }
    let count = hull.vertex_count();
    let mut transformed = vec![0.0; count * dim];
    let mut diff = vec![0.0; dim];
    for (i, v) in hull.vertices().enumerate() {
        for k in 0..dim {
            diff[k] = v[k] - x[k];
        }
        metric.transform_into(&diff, &mut transformed[i * dim..(i + 1) * dim]);
    }
    let mnp = min_norm_point(&transformed, dim)?;
    let mut point = vec![0.0; dim];
    for (v, &w) in hull.vertices().zip(&mnp.weights) {
        if w != 0.0 {
            for k in 0..dim {
                point[k] += w * v[k];
            }
        }
    }
    Ok(ProjectionResult { point, distance: mnp.norm_sq.sqrt(), weights: mnp.weights })
}

/// Euclidean distance from `x` to `hull`.
pub fn violation_distance(x: &[f64], hull: &ConvexPolytope) -> Result<f64> {
    if x.len() != hull.dim() {
        return Err(Error::DimensionMismatch { expected: hull.dim(), found: x.len() });
    }
    if hull.dim() == 1 {
        let lo = hull.vertex(0)[0];
        let hi = hull.vertex(hull.vertex_count() - 1)[0];
        let v = x[0];
        return Ok((lo - v).max(0.0) + (v - hi).max(0.0));
    }
    Ok(metric_project(x, hull, &MetricMatrix::identity(hull.dim()))?.distance)
}

#[cfg(test)]
mod tests {
    use super::super::convex_hull;
    use super::*;

    #[test]
    fn projection_onto_diagonal_segment() {
        let k = convex_hull(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let r = metric_project(&[2.0, 0.0], &k, &MetricMatrix::identity(2)).unwrap();
        // minimize (s-2)^2 + s^2 on [0,1]: s = 1
        assert!((r.point[0] - 1.0).abs() < 1e-14 && (r.point[1] - 1.0).abs() < 1e-14);
        assert!((r.distance - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn weighted_metric_clamps_second_coordinate() {
        let k = convex_hull(&[[-10.0, 0.0], [10.0, 0.0], [10.0, -10.0], [-10.0, -10.0]]).unwrap();
        let a = MetricMatrix::diagonal(&[1.0, 4.0]).unwrap();
        let r = metric_project(&[1.0, 1.0], &k, &a).unwrap();
        assert!((r.point[0] - 1.0).abs() < 1e-12 && r.point[1].abs() < 1e-12);
        assert!((r.distance - 2.0).abs() < 1e-12);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-10 && r.weights.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn vertices_project_to_themselves() {
        let k = convex_hull(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let a = MetricMatrix::from_row_slice(3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 3.0]).unwrap();
        for v in k.vertices() {
            let r = metric_project(v, &k, &a).unwrap();
            assert_eq!(r.point, v);
            assert_eq!(r.distance, 0.0);
        }
    }

    #[test]
    fn violation_distance_examples() {
        let k = convex_hull(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let d = violation_distance(&[0.3679, 0.1353], &k).unwrap();
        assert!((d - (0.3679_f64 - 0.1353).abs() / 2f64.sqrt()).abs() < 1e-12);
        assert!((d - 0.1645).abs() < 1e-4);
        assert!(violation_distance(&[0.5, 0.5], &k).unwrap() < 1e-15);
        let k = convex_hull(&[[0.0], [2.0]]).unwrap();
        assert_eq!(violation_distance(&[-1.0], &k).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let k = convex_hull(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(metric_project(&[0.0], &k, &MetricMatrix::identity(2)).is_err());
        assert!(metric_project(&[0.0, 0.0], &k, &MetricMatrix::identity(3)).is_err());
    }
}
