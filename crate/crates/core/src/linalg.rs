//! Sparse matrices and the two linear solvers used by the PDE modules:
//! banded LU (no pivoting) and Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Compressed sparse row matrix, square.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed in insertion order, so identical
    /// triplet streams give bitwise identical matrices.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol
    }

    /// Keeps rows and columns in `keep` (sorted), renumbered consecutively.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            for (c, v) in self.row(old_r) {
                if map[c] != usize::MAX {
                    trip.push((new_r, map[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), trip)
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lo = lo.max(i - j);
                } else {
                    up = up.max(j - i);
                }
            }
        }
        (lo, up)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|A x - b| / |b|`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// LU factors of a banded matrix, computed without pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let (lower, upper) = a.bandwidths();
        let width = lower + upper + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in a.row(i) {
                band[i * width + (j + lower - i)] = v;
            }
        }
        let scale = band.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let at = |i: usize, j: usize| i * width + (j + lower - i);
        for k in 0..n {
            let pivot = band[at(k, k)];
            if pivot.abs() <= 1e-300_f64.max(1e-15 * scale) {
                return Err(Error::Solver {
                    reason: format!("zero pivot at row {k}"),
                    residual: f64::INFINITY,
                });
            }
            let i_end = (k + lower + 1).min(n);
            let j_end = (k + upper + 1).min(n);
            for i in (k + 1)..i_end {
                let l = band[at(i, k)] / pivot;
                if l == 0.0 {
                    continue;
                }
                band[at(i, k)] = l;
                for j in (k + 1)..j_end {
                    band[at(i, j)] -= l * band[at(k, j)];
                }
            }
        }
        Ok(Self { n, lower, upper, width, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, w, lo, up) = (self.n, self.width, self.lower, self.upper);
        let at = |i: usize, j: usize| i * w + (j + lo - i);
        let mut x = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(lo);
            let mut s = x[i];
            for j in start..i {
                s -= self.band[at(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + up + 1).min(n);
            let mut s = x[i];
            for j in (i + 1)..end {
                s -= self.band[at(i, j)] * x[j];
            }
            x[i] = s / self.band[at(i, i)];
        }
        x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients with diagonal (Jacobi) preconditioning, for SPD `a`.
/// Stops when `|r| <= rel_tol * |b|`; fails after `max_iter` iterations.
pub fn pcg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgReport)> {
    let n = a.dim();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, CgReport { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 0..max_iter {
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver {
                reason: "matrix is not positive definite".into(),
                residual: norm2(&r) / nb,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm2(&r) / nb;
        if res <= rel_tol {
            return Ok((x, CgReport { iterations: it + 1, relative_residual: res }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver {
        reason: format!("conjugate gradients hit the cap of {max_iter} iterations"),
        residual: norm2(&r) / nb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 0.5)]);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn banded_lu_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x_true);
        let x = BandedLu::factor(&a).unwrap().solve(&b);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-11);
        }
    }

    #[test]
    fn banded_lu_nonsymmetric() {
        let mut t = Vec::new();
        for i in 0..20 {
            t.push((i, i, 4.0));
            if i > 1 {
                t.push((i, i - 2, -1.5));
            }
            if i + 1 < 20 {
                t.push((i, i + 1, 0.7));
            }
        }
        let a = CsrMatrix::from_triplets(20, t);
        assert_eq!(a.bandwidths(), (2, 1));
        let b: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x = BandedLu::factor(&a).unwrap().solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian_1d(40);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let (x, rep) = pcg(&a, &b, 1e-12, 800).unwrap();
        let y = BandedLu::factor(&a).unwrap().solve(&b);
        assert!(rep.relative_residual <= 1e-12);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn pcg_reports_cap() {
        let a = laplacian_1d(40);
        let b = vec![1.0; 40];
        assert!(matches!(pcg(&a, &b, 1e-14, 2), Err(Error::Solver { .. })));
    }

    #[test]
    fn zero_pivot_is_an_error() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(BandedLu::factor(&a).is_err());
    }

    #[test]
    fn submatrix_and_symmetry() {
        let a = laplacian_1d(5);
        let s = a.submatrix(&[1, 2, 3]);
        assert_eq!(s.dim(), 3);
        assert_eq!(s.get(0, 1), -1.0);
        assert!(s.is_symmetric(1e-14));
        let n = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 0, 1.0), (1, 1, 1.0)]);
        assert!(!n.is_symmetric(1e-12));
    }
}
