use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;

/// A symmetric positive definite matrix `A` defining the inner product
/// `<v, w>_A = v . A w` on `R^N`, together with its Cholesky factor `L`
/// (`A = L L^T`).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    entries: DMatrix<f64>,
    factor: DMatrix<f64>,
    identity: bool,
}

impl MetricMatrix {
    /// Validates symmetry and positive definiteness.
    ///
    /// Symmetry is checked relative to `max |A_ij|`; the factorization
    /// rejects any pivot `<= 1e-12 * max |A_ij|`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n.max(1),
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("metric matrix has non-finite entries".into()));
        }
        let scale = entries.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let factor = cholesky(&entries, PIVOT_TOL * scale)?;
        let identity = entries == DMatrix::identity(n, n);
        Ok(Self { entries, factor, identity })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            factor: DMatrix::identity(n, n),
            identity: true,
        }
    }

    /// Diagonal metric `diag(d_1, ..., d_N)`.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    /// Builds from a row-major slice of length `n * n`.
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower-triangular Cholesky factor `L`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `<v, w>_A`.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        if self.identity {
            return v.iter().zip(w).map(|(a, b)| a * b).sum();
        }
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * w[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// `|v|_A`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Writes `L^T v` into `out`. Then `|v|_A = |L^T v|`.
    pub fn transform_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        if self.identity {
            out.copy_from_slice(v);
            return;
        }
        for i in 0..n {
            // (L^T)_{ij} = L_{ji}, nonzero for j >= i
            out[i] = (i..n).map(|j| self.factor[(j, i)] * v[j]).sum();
        }
    }

    pub fn transform(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.transform_into(v, &mut out);
        out
    }
}

/// Plain Cholesky with an explicit pivot floor.
fn cholesky(a: &DMatrix<f64>, pivot_floor: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= pivot_floor || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}
