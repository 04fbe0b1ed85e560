//! Minimum-norm point of the convex hull of a finite point set.
//!
//! Active-set method over convex combinations (Wolfe's algorithm). The
//! iterate is kept as a convex combination of a "corral" of affinely
//! independent points. A major cycle adds the point that most decreases
//! `<x, q>`; minor cycles move towards the affine minimizer of the corral
//! and drop points whose weight reaches zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Optimality gap `|x|^2 - min_i <x, q_i>`, relative to `max_i |q_i|^2`.
pub const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MinNormPoint {
    /// One weight per input point, nonnegative, summing to one.
    pub weights: Vec<f64>,
    pub point: Vec<f64>,
    pub norm_sq: f64,
}

/// Points are stored flat, `dim` coordinates each.
pub fn min_norm_point(points: &[f64], dim: usize) -> Result<MinNormPoint> {
    if dim == 0 || points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, found: points.len() % dim });
    }
    let count = points.len() / dim;
    let q = |i: usize| &points[i * dim..(i + 1) * dim];

    let norms: Vec<f64> = (0..count).map(|i| dot(q(i), q(i))).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    // lowest index wins ties
    let mut first = 0;
    for (i, &n) in norms.iter().enumerate() {
        if n < norms[first] {
            first = i;
        }
    }
    let mut corral = vec![first];
    let mut weights = vec![1.0];
    let mut x = q(first).to_vec();
    let mut x_norm = norms[first];

    let cap = 10 * count.max(1);
    for _ in 0..cap {
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for i in 0..count {
            let v = dot(&x, q(i));
            if v < best_val {
                best_val = v;
                best = i;
            }
        }
        if x_norm - best_val <= GAP_TOL * scale || corral.contains(&best) {
            return Ok(finish(count, &corral, &weights, x, x_norm));
        }

        let prev = (corral.clone(), weights.clone(), x.clone(), x_norm);
        corral.push(best);
        weights.push(0.0);

        loop {
            let alpha = affine_minimizer(points, dim, &corral);
            if alpha.iter().all(|&a| a > 0.0) {
                weights = alpha;
                break;
            }
            // Largest step towards alpha keeping the weights nonnegative.
            let mut theta = 1.0_f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= 0.0 {
                    let denom = w - a;
                    let t = if denom > 0.0 { w / denom } else { 0.0 };
                    theta = theta.min(t);
                }
            }
            let mut drop = None;
            let mut smallest = f64::INFINITY;
            for (k, (w, a)) in weights.iter_mut().zip(&alpha).enumerate() {
                *w = (1.0 - theta) * *w + theta * a;
                if *a <= 0.0 && *w < smallest {
                    smallest = *w;
                    drop = Some(k);
                }
            }
            let drop_at = drop.expect("a nonpositive affine weight exists");
            let keep: Vec<bool> = weights
                .iter()
                .enumerate()
                .map(|(k, &w)| k != drop_at && w > 0.0)
                .collect();
            let mut it = keep.iter();
            corral.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            weights.retain(|_| *it.next().unwrap());
            if corral.is_empty() {
                // Rounding wiped the corral; fall back to the previous iterate.
                return Ok(finish(count, &prev.0, &prev.1, prev.2, prev.3));
            }
            normalize(&mut weights);
        }

        let new_x = combine(points, dim, &corral, &weights);
        let new_norm = dot(&new_x, &new_x);
        if new_norm >= x_norm {
            // No progress in floating point: the previous iterate is optimal
            // to working precision.
            return Ok(finish(count, &prev.0, &prev.1, prev.2, prev.3));
        }
        x = new_x;
        x_norm = new_norm;
    }
    Err(Error::ProjectionNoConvergence { iterations: cap })
}

fn finish(count: usize, corral: &[usize], weights: &[f64], point: Vec<f64>, norm_sq: f64) -> MinNormPoint {
    let mut full = vec![0.0; count];
    for (&i, &w) in corral.iter().zip(weights) {
        full[i] = w;
    }
    MinNormPoint { weights: full, point, norm_sq }
}

fn normalize(weights: &mut [f64]) {
    let s: f64 = weights.iter().sum();
    if s > 0.0 {
        weights.iter_mut().for_each(|w| *w /= s);
    }
}

fn combine(points: &[f64], dim: usize, corral: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&i, &w) in corral.iter().zip(weights) {
        for (o, p) in out.iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
            *o += w * p;
        }
    }
    out
}

/// Weights (summing to one) of the minimum-norm point of the affine hull of
/// the corral. Rank-deficient corrals get the least-squares minimal solution.
fn affine_minimizer(points: &[f64], dim: usize, corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    if k == 1 {
        return vec![1.0];
    }
    let base = &points[corral[0] * dim..(corral[0] + 1) * dim];
    // minimize |base + D beta|, D columns = q_s - base
    let mut d = DMatrix::zeros(dim, k - 1);
    for (c, &i) in corral[1..].iter().enumerate() {
        for r in 0..dim {
            d[(r, c)] = points[i * dim + r] - base[r];
        }
    }
    let rhs = -DVector::from_column_slice(base);
    let svd = d.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let beta = svd
        .solve(&rhs, cutoff.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter());
    alpha
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
