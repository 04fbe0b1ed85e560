use std::cmp::Ordering;

use serde::Serialize;

use super::mnp::min_norm_point;
use crate::error::{Error, Result};

/// Largest ambient dimension accepted by [`convex_hull`].
pub const MAX_DIM: usize = 8;

/// Closed convex hull of finitely many points, kept as a minimal vertex list
/// (V-representation).
///
/// In one dimension the vertices are `[min, max]` (or a single point); in
/// two dimensions they are in counterclockwise order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolytope {
    dim: usize,
    vertices: Vec<f64>,
}

impl ConvexPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.vertices.chunks_exact(self.dim)
    }

    /// Vertex coordinates, flat.
    pub fn flat_vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn to_vec(&self) -> Vec<Vec<f64>> {
        self.vertices().map(<[f64]>::to_vec).collect()
    }

    /// Returns the hull with the origin added.
    pub fn with_origin(&self) -> Result<ConvexPolytope> {
        let mut pts = self.to_vec();
        pts.push(vec![0.0; self.dim]);
        convex_hull(&pts)
    }
}

/// Builds the minimal V-representation of the convex hull of `points`.
///
/// Hulls in one and two dimensions are computed directly (interval and
/// monotone chain). In higher dimensions, each candidate is dropped when it
/// lies in the hull of the remaining candidates, which is decided by a
/// minimum-norm-point solve.
pub fn convex_hull<P: AsRef<[f64]>>(points: &[P]) -> Result<ConvexPolytope> {
    let first = points.first().ok_or(Error::EmptyPointSet)?;
    let dim = first.as_ref().len();
    if dim == 0 {
        return Err(Error::InvalidArgument("points must have at least one coordinate".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!("hulls are supported up to dimension {MAX_DIM}")));
    }
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        if let Some(index) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint { index });
        }
    }
    let vertices = match dim {
        1 => interval(points),
        2 => monotone_chain(points),
        _ => filter_by_membership(&distinct(points), dim)?,
    };
    Ok(ConvexPolytope { dim, vertices })
}

fn interval<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let (lo, hi) = points
        .iter()
        .map(|p| p.as_ref()[0])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn monotone_chain<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p.as_ref()[0], p.as_ref()[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts.into_iter().flatten().collect();
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull.into_iter().flatten().collect()
}

/// Exact duplicates removed, first occurrences kept in input order.
fn distinct<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<f64>> {
    let lex = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex(points[i].as_ref(), points[j].as_ref()).then(i.cmp(&j)));
    let mut keep = vec![false; points.len()];
    let mut prev: Option<usize> = None;
    for &i in &order {
        if prev.map_or(true, |p| lex(points[p].as_ref(), points[i].as_ref()) != Ordering::Equal) {
            keep[i] = true;
        }
        prev = Some(i);
    }
    points
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p.as_ref().to_vec())
        .collect()
}

fn filter_by_membership(points: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * (1.0 + scale);
    let mut alive = vec![true; points.len()];
    let mut shifted = Vec::with_capacity(points.len() * dim);
    for i in 0..points.len() {
        if alive.iter().filter(|a| **a).count() == 1 {
            break;
        }
        shifted.clear();
        for (j, q) in points.iter().enumerate() {
            if j != i && alive[j] {
                shifted.extend(q.iter().zip(&points[i]).map(|(a, b)| a - b));
            }
        }
        let mnp = min_norm_point(&shifted, dim)?;
        if mnp.norm_sq.sqrt() <= tol {
            alive[i] = false;
        }
    }
    Ok(points
        .iter()
        .zip(&alive)
        .filter(|(_, a)| **a)
        .flat_map(|(p, _)| p.iter().copied())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_point_is_eliminated() {
        let k = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.25, 0.25]]).unwrap();
        assert_eq!(k.to_vec(), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn diagonal_samples_give_segment() {
        let pts: Vec<[f64; 2]> = (0..=10).map(|i| [i as f64 / 10.0; 2]).collect();
        let k = convex_hull(&pts).unwrap();
        assert_eq!(k.to_vec(), vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn singleton_interval() {
        let k = convex_hull(&[[3.0]]).unwrap();
        assert_eq!(k.vertex_count(), 1);
        assert_eq!(k.vertex(0), &[3.0]);
        let k = convex_hull(&[[3.0], [-1.0], [0.5]]).unwrap();
        assert_eq!(k.to_vec(), vec![vec![-1.0], vec![3.0]]);
    }

    #[test]
    fn counterclockwise_order() {
        let k = convex_hull(&[[1.0, 1.0], [0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]).unwrap();
        let v = k.to_vec();
        assert_eq!(v.len(), 4);
        let mut area = 0.0;
        for i in 0..4 {
            let (a, b) = (&v[i], &v[(i + 1) % 4]);
            area += a[0] * b[1] - a[1] * b[0];
        }
        assert!(area > 0.0);
    }

    #[test]
    fn errors() {
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(convex_hull(&empty), Err(Error::EmptyPointSet)));
        assert!(matches!(
            convex_hull(&[[0.0, f64::NAN]]),
            Err(Error::InvalidPoint { index: 1 })
        ));
        assert!(matches!(
            convex_hull(&[vec![0.0, 1.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cube_with_interior_and_duplicate_points() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.push(vec![0.5, 0.5, 0.5]);
        pts.push(vec![1.0, 0.5, 0.5]); // on a face
        pts.push(vec![1.0, 1.0, 1.0]); // duplicate corner
        let k = convex_hull(&pts).unwrap();
        assert_eq!(k.vertex_count(), 8);
    }

    #[test]
    fn coplanar_points_in_three_dimensions() {
        let pts = vec![
            vec![0.0, 0.0, 1.0],
            vec![2.0, 0.0, 1.0],
            vec![0.0, 2.0, 1.0],
            vec![0.5, 0.5, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        let k = convex_hull(&pts).unwrap();
        assert_eq!(k.vertex_count(), 3);
    }
}
