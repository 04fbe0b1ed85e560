//! P1 finite elements for the linear system `-div(A grad u) = 0` with
//! tensor-product coefficients `A_ij^{ab}(x) = M^{ab}(x) a_ij(x)`.
//!
//! `M(x)` couples the `N` solution components, `a(x)` is the spatial
//! diffusion. Constant `M` is the structure under which the convex hull
//! property holds; an `x`-dependent `M(x)` is accepted so that the
//! one-dimensional counterexample can be assembled too.
//!
//! All coefficients are sampled once per element at the barycenter.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::discretization::{Mesh, NodalField};
use crate::error::{Error, Result};
use crate::geometry::MetricMatrix;
use crate::linalg::{pcg, relative_residual, BandedLu, CsrMatrix};

/// A spatially varying square matrix.
pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Relative tolerance the Dirichlet solve must reach.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
const CG_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum ComponentCoupling {
    Constant(MetricMatrix),
    Variable { components: usize, field: MatrixField },
}

/// Coefficients `M(x) (x) a(x)` with the ellipticity floor `lambda` of `a`.
#[derive(Clone)]
pub struct EllipticCoefficients {
    coupling: ComponentCoupling,
    diffusion: MatrixField,
    lambda: f64,
}

impl std::fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticCoefficients")
            .field("components", &self.components())
            .field("constant_coupling", &self.has_constant_coupling())
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl EllipticCoefficients {
    pub fn new(coupling: MetricMatrix, diffusion: MatrixField, lambda: f64) -> Result<Self> {
        Self::build(ComponentCoupling::Constant(coupling), diffusion, lambda)
    }

    /// `x`-dependent component coupling. SPD-ness is checked per element
    /// during assembly.
    pub fn variable(components: usize, coupling: MatrixField, diffusion: MatrixField, lambda: f64) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidArgument("at least one component required".into()));
        }
        Self::build(ComponentCoupling::Variable { components, field: coupling }, diffusion, lambda)
    }

    fn build(coupling: ComponentCoupling, diffusion: MatrixField, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("ellipticity floor must be positive".into()));
        }
        Ok(Self { coupling, diffusion, lambda })
    }

    /// `a(x) = I` in any dimension, `lambda = 1`.
    pub fn identity_diffusion(dim: usize) -> MatrixField {
        Arc::new(move |_: &[f64]| DMatrix::identity(dim, dim))
    }

    /// Scalar diffusion `a(x) = s(x) I`.
    pub fn scalar_diffusion<F>(dim: usize, s: F) -> MatrixField
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Arc::new(move |x: &[f64]| DMatrix::identity(dim, dim) * s(x))
    }

    pub fn components(&self) -> usize {
        match &self.coupling {
            ComponentCoupling::Constant(m) => m.dim(),
            ComponentCoupling::Variable { components, .. } => *components,
        }
    }

    pub fn has_constant_coupling(&self) -> bool {
        matches!(self.coupling, ComponentCoupling::Constant(_))
    }

    pub fn coupling(&self) -> &ComponentCoupling {
        &self.coupling
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same coefficients with the diffusion multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let d = self.diffusion.clone();
        Self {
            coupling: self.coupling.clone(),
            diffusion: Arc::new(move |x: &[f64]| d(x) * s),
            lambda: self.lambda * s,
        }
    }

    fn coupling_at(&self, x: &[f64], element: usize) -> Result<DMatrix<f64>> {
        match &self.coupling {
            ComponentCoupling::Constant(m) => Ok(m.entries().clone()),
            ComponentCoupling::Variable { components, field } => {
                let m = field(x);
                if m.nrows() != *components || m.ncols() != *components {
                    return Err(Error::Coefficient { element, reason: "coupling matrix has wrong shape".into() });
                }
                MetricMatrix::new(m.clone())
                    .map_err(|e| Error::Coefficient { element, reason: format!("coupling matrix: {e}") })?;
                Ok(m)
            }
        }
    }

    fn diffusion_at(&self, x: &[f64], dim: usize, element: usize) -> Result<DMatrix<f64>> {
        let a = (self.diffusion)(x);
        check_diffusion(&a, dim, self.lambda, element)?;
        Ok(a)
    }
}

/// Shape, symmetry and `xi . a xi >= lambda |xi|^2` for a sampled diffusion.
pub(crate) fn check_diffusion(a: &DMatrix<f64>, dim: usize, lambda: f64, element: usize) -> Result<()> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::Coefficient { element, reason: format!("diffusion must be {dim}x{dim}") });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Coefficient { element, reason: "diffusion is not finite".into() });
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Coefficient { element, reason: "diffusion is not symmetric".into() });
    }
    let min_eig = match dim {
        1 => a[(0, 0)],
        _ => a.clone().symmetric_eigenvalues().min(),
    };
    if min_eig < lambda * (1.0 - 1e-12) {
        return Err(Error::Coefficient {
            element,
            reason: format!("diffusion eigenvalue {min_eig:e} below ellipticity floor {lambda:e}"),
        });
    }
    Ok(())
}

/// Assembled stiffness operator on (node, component) unknowns, numbered
/// node-major: unknown `i * N + alpha`.
#[derive(Debug, Clone)]
pub struct BlockSparseSystem {
    mesh: Arc<Mesh>,
    components: usize,
    matrix: CsrMatrix,
    symmetric: bool,
}

impl BlockSparseSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Entry coupling test node `i` / component `alpha` with trial node `j`
    /// / component `beta`.
    pub fn entry(&self, i: usize, alpha: usize, j: usize, beta: usize) -> f64 {
        let n = self.components;
        self.matrix.get(i * n + alpha, j * n + beta)
    }

    /// Boolean mask over unknowns, true where the value is prescribed.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        (0..self.matrix.dim())
            .map(|k| self.mesh.is_boundary(k / self.components))
            .collect()
    }

    /// Relative residual of the free (interior) equations for `field`,
    /// measured against the boundary lift.
    pub fn free_residual(&self, field: &NodalField) -> f64 {
        let mask = self.dirichlet_mask();
        let u = field.values();
        let ku = self.matrix.matvec(u);
        let lift: Vec<f64> = u.iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
        let kl = self.matrix.matvec(&lift);
        let num: f64 = ku.iter().zip(&mask).filter(|(_, m)| !**m).map(|(r, _)| r * r).sum();
        let den: f64 = kl.iter().zip(&mask).filter(|(_, m)| !**m).map(|(r, _)| r * r).sum();
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    }
}

/// Assembles `sum_e |e| M^{ab}(x_e) (a(x_e) grad phi_j) . grad phi_i`.
pub fn assemble(mesh: &Arc<Mesh>, coeffs: &EllipticCoefficients) -> Result<BlockSparseSystem> {
    let n = coeffs.components();
    let dim = mesh.dim();
    let per = dim + 1;
    let mut trip = Vec::with_capacity(mesh.element_count() * per * per * n * n);
    for e in 0..mesh.element_count() {
        let x = mesh.midpoint(e);
        let coupling = coeffs.coupling_at(&x, e)?;
        let a = coeffs.diffusion_at(&x, dim, e)?;
        let nodes = mesh.element(e);
        let vol = mesh.measure(e);
        for (k, &i) in nodes.iter().enumerate() {
            let gi = mesh.basis_gradient(e, k);
            for (l, &j) in nodes.iter().enumerate() {
                let gj = mesh.basis_gradient(e, l);
                let mut s = 0.0;
                for r in 0..dim {
                    for c in 0..dim {
                        s += gi[r] * a[(r, c)] * gj[c];
                    }
                }
                let local = vol * s;
                for alpha in 0..n {
                    for beta in 0..n {
                        let m = coupling[(alpha, beta)];
                        if m != 0.0 {
                            trip.push((i * n + alpha, j * n + beta, m * local));
                        }
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(mesh.node_count() * n, trip);
    let symmetric = matrix.is_symmetric(1e-12);
    Ok(BlockSparseSystem { mesh: mesh.clone(), components: n, matrix, symmetric })
}

/// Prescribed values at the mesh's boundary nodes, in `mesh.boundary_nodes()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData {
    components: usize,
    values: Vec<f64>,
}

impl DirichletData {
    pub fn new(mesh: &Mesh, components: usize, values: Vec<f64>) -> Result<Self> {
        let expected = mesh.boundary_nodes().len() * components;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint { index });
        }
        Ok(Self { components, values })
    }

    pub fn from_fn<F>(mesh: &Mesh, components: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(mesh.boundary_nodes().len() * components);
        for &b in mesh.boundary_nodes() {
            let v = f(mesh.node(b));
            if v.len() != components {
                return Err(Error::DimensionMismatch { expected: components, found: v.len() });
            }
            values.extend(v);
        }
        Self::new(mesh, components, values)
    }

    /// The trace of a field.
    pub fn from_field(field: &NodalField) -> Self {
        let values = field.boundary_values().concat();
        Self { components: field.components(), values }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Value at the `k`-th boundary node.
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.components..(k + 1) * self.components]
    }
}

/// Solves `K u = 0` on the free unknowns with the boundary values moved to
/// the right-hand side.
pub fn solve_dirichlet(system: &BlockSparseSystem, boundary: &DirichletData) -> Result<NodalField> {
    let n = system.components;
    if boundary.components != n {
        return Err(Error::DimensionMismatch { expected: n, found: boundary.components });
    }
    let mesh = &system.mesh;
    let mut field = NodalField::zeros(mesh.clone(), n);
    for (k, &b) in mesh.boundary_nodes().iter().enumerate() {
        field.set_value(b, boundary.value(k));
    }
    let mask = system.dirichlet_mask();
    let free: Vec<usize> = (0..mask.len()).filter(|&k| !mask[k]).collect();
    let lift: Vec<f64> = field.values().to_vec();
    let k_lift = system.matrix.matvec(&lift);
    let rhs: Vec<f64> = free.iter().map(|&k| -k_lift[k]).collect();
    let reduced = system.matrix.submatrix(&free);
    let x = solve_linear(&reduced, &rhs, mesh.dim() == 2 && system.symmetric)?;
    let values = field.values_mut();
    for (&k, v) in free.iter().zip(&x) {
        values[k] = *v;
    }
    Ok(field)
}

/// Banded LU by default; Jacobi-preconditioned CG when `iterative`.
/// Either way the relative residual must reach [`SOLVE_RESIDUAL_TOL`].
pub(crate) fn solve_linear(a: &CsrMatrix, rhs: &[f64], iterative: bool) -> Result<Vec<f64>> {
    let x = if iterative {
        pcg(a, rhs, CG_TOL, 20 * a.dim().max(1))?.0
    } else {
        BandedLu::factor(a)?.solve(rhs)
    };
    let res = relative_residual(a, &x, rhs);
    if !(res <= SOLVE_RESIDUAL_TOL) {
        return Err(Error::Solver { reason: "residual above tolerance".into(), residual: res });
    }
    Ok(x)
}

/// Scalar problem `-div(a grad u) = 0`.
pub fn solve_scalar_mp(mesh: &Arc<Mesh>, diffusion: MatrixField, lambda: f64, boundary: &DirichletData) -> Result<NodalField> {
    let coeffs = EllipticCoefficients::new(MetricMatrix::identity(1), diffusion, lambda)?;
    solve_dirichlet(&assemble(mesh, &coeffs)?, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{interval_mesh, rect_mesh};

    fn unit_interval(cells: usize) -> Arc<Mesh> {
        Arc::new(interval_mesh(0.0, 1.0, cells).unwrap())
    }

    #[test]
    fn hand_assembled_stencil() {
        let mesh = unit_interval(2);
        let c = EllipticCoefficients::new(MetricMatrix::identity(1), EllipticCoefficients::identity_diffusion(1), 1.0).unwrap();
        let s = assemble(&mesh, &c).unwrap();
        // interior row: (-1/h, 2/h, -1/h) with h = 1/2
        assert_eq!([s.entry(1, 0, 0, 0), s.entry(1, 0, 1, 0), s.entry(1, 0, 2, 0)], [-2.0, 4.0, -2.0]);
        assert!(s.is_symmetric());
    }

    #[test]
    fn identity_coupling_decouples() {
        let mesh = unit_interval(4);
        let scalar = assemble(
            &mesh,
            &EllipticCoefficients::new(MetricMatrix::identity(1), EllipticCoefficients::identity_diffusion(1), 1.0).unwrap(),
        )
        .unwrap();
        let block = assemble(
            &mesh,
            &EllipticCoefficients::new(MetricMatrix::identity(2), EllipticCoefficients::identity_diffusion(1), 1.0).unwrap(),
        )
        .unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let v = scalar.entry(i, 0, j, 0);
                assert_eq!(block.entry(i, 0, j, 0), v);
                assert_eq!(block.entry(i, 1, j, 1), v);
                assert_eq!(block.entry(i, 0, j, 1), 0.0);
            }
        }
    }

    #[test]
    fn scaling_diffusion_scales_entries() {
        let mesh = Arc::new(rect_mesh((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap());
        let m = MetricMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let c = EllipticCoefficients::new(m, EllipticCoefficients::scalar_diffusion(2, |x| 1.0 + x[0]), 1.0).unwrap();
        let a = assemble(&mesh, &c).unwrap();
        let b = assemble(&mesh, &c.scaled(3.0)).unwrap();
        for r in 0..a.matrix().dim() {
            for (col, v) in a.matrix().row(r) {
                assert!((b.matrix().get(r, col) - 3.0 * v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn linear_solution_is_reproduced() {
        let mesh = unit_interval(8);
        let bc = DirichletData::from_fn(&mesh, 1, |x| vec![x[0]]).unwrap();
        let u = solve_scalar_mp(&mesh, EllipticCoefficients::identity_diffusion(1), 1.0, &bc).unwrap();
        for i in 0..=8 {
            assert!((u.value(i)[0] - mesh.node(i)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_are_solutions() {
        let mesh = unit_interval(6);
        let m = MetricMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        let c = EllipticCoefficients::new(m, EllipticCoefficients::scalar_diffusion(1, |x| 1.0 + x[0] * x[0]), 1.0).unwrap();
        let bc = DirichletData::from_fn(&mesh, 2, |_| vec![0.7, -1.3]).unwrap();
        let u = solve_dirichlet(&assemble(&mesh, &c).unwrap(), &bc).unwrap();
        for i in 0..=6 {
            assert!((u.value(i)[0] - 0.7).abs() < 1e-13 && (u.value(i)[1] + 1.3).abs() < 1e-13);
        }
        let bc = DirichletData::from_fn(&mesh, 1, |_| vec![2.0]).unwrap();
        let u = solve_scalar_mp(&mesh, EllipticCoefficients::identity_diffusion(1), 1.0, &bc).unwrap();
        assert!(u.values().iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn non_spd_coefficients_name_the_element() {
        let mesh = unit_interval(4);
        let bad_coupling: MatrixField = Arc::new(|x: &[f64]| DMatrix::from_row_slice(2, 2, &[1.0, 2.0 * x[0], 2.0 * x[0], 1.0]));
        let c = EllipticCoefficients::variable(2, bad_coupling, EllipticCoefficients::identity_diffusion(1), 1.0).unwrap();
        match assemble(&mesh, &c) {
            // midpoint 0.625 is the first where 2x > 1
            Err(Error::Coefficient { element, .. }) => assert_eq!(element, 2),
            other => panic!("unexpected {other:?}"),
        }
        let weak = EllipticCoefficients::new(MetricMatrix::identity(1), EllipticCoefficients::scalar_diffusion(1, |x| x[0]), 0.5).unwrap();
        assert!(matches!(assemble(&mesh, &weak), Err(Error::Coefficient { element: 0, .. })));
    }

    #[test]
    fn two_dimensional_solve_uses_cg_and_meets_residual() {
        let mesh = Arc::new(rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap());
        let bc = DirichletData::from_fn(&mesh, 1, |x| vec![x[0] + x[1]]).unwrap();
        let u = solve_scalar_mp(&mesh, EllipticCoefficients::identity_diffusion(2), 1.0, &bc).unwrap();
        for i in 0..mesh.node_count() {
            let x = mesh.node(i);
            assert!((u.value(i)[0] - x[0] - x[1]).abs() < 1e-9);
        }
    }
}
