use std::sync::Arc;

use nalgebra::DMatrix;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::geometry::{metric_project, ConvexPolytope, MetricMatrix};

/// Piecewise-linear `R^N`-valued function: one vector per mesh node, stored
/// node by node with the components contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: Arc<Mesh>,
    components: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: Arc<Mesh>, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidArgument("a field needs at least one component".into()));
        }
        let expected = mesh.node_count() * components;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint { index });
        }
        Ok(Self { mesh, components, values })
    }

    pub fn zeros(mesh: Arc<Mesh>, components: usize) -> Self {
        let values = vec![0.0; mesh.node_count() * components];
        Self { mesh, components, values }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn<F>(mesh: Arc<Mesh>, components: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(mesh.node_count() * components);
        for i in 0..mesh.node_count() {
            let v = f(mesh.node(i));
            if v.len() != components {
                return Err(Error::DimensionMismatch { expected: components, found: v.len() });
            }
            values.extend(v);
        }
        Self::new(mesh, components, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub fn set_value(&mut self, node: usize, v: &[f64]) {
        self.values[node * self.components..(node + 1) * self.components].copy_from_slice(v);
    }

    /// Values at the mesh's boundary nodes (the discrete trace).
    pub fn boundary_values(&self) -> Vec<&[f64]> {
        self.mesh.boundary_nodes().iter().map(|&i| self.value(i)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sum_i m_i |u_i|^2` with lumped mass weights.
    pub fn mass_norm_sq(&self) -> f64 {
        self.mesh
            .lumped_mass()
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.value(i).iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Writes the `N x dim` element gradient, row-major, into `out`.
    pub(crate) fn gradient_into(&self, e: usize, out: &mut [f64]) {
        let dim = self.mesh.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &node) in self.mesh.element(e).iter().enumerate() {
            let g = self.mesh.basis_gradient(e, k);
            let u = self.value(node);
            for a in 0..self.components {
                for d in 0..dim {
                    out[a * dim + d] += u[a] * g[d];
                }
            }
        }
    }

    /// Average of the element's nodal values (value at the barycenter).
    pub(crate) fn midpoint_value(&self, e: usize) -> Vec<f64> {
        let nodes = self.mesh.element(e);
        let mut out = vec![0.0; self.components];
        for &i in nodes {
            for (o, v) in out.iter_mut().zip(self.value(i)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v /= nodes.len() as f64);
        out
    }
}

/// Exact gradient of the P1 interpolant on element `e`, as an `N x dim`
/// matrix (row `a` is the gradient of component `a`).
pub fn element_gradient(field: &NodalField, e: usize) -> Result<DMatrix<f64>> {
    let count = field.mesh.element_count();
    if e >= count {
        return Err(Error::ElementOutOfRange { index: e, count });
    }
    let dim = field.mesh.dim();
    let mut g = vec![0.0; field.components * dim];
    field.gradient_into(e, &mut g);
    Ok(DMatrix::from_row_slice(field.components, dim, &g))
}

/// Nodewise projection `Pi_K^A o u`. Nodes already in `K` keep their value.
pub fn project_field(field: &NodalField, hull: &ConvexPolytope, metric: &MetricMatrix) -> Result<NodalField> {
    if hull.dim() != field.components {
        return Err(Error::DimensionMismatch { expected: field.components, found: hull.dim() });
    }
    let mut out = field.clone();
    for i in 0..field.mesh.node_count() {
        let p = metric_project(field.value(i), hull, metric)?;
        if p.distance > 0.0 {
            out.set_value(i, &p.point);
        }
    }
    Ok(out)
}

/// A field per time level on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<NodalField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<NodalField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument("a trajectory needs one field per time level".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        let first = &fields[0];
        if fields.iter().any(|f| f.components != first.components || f.mesh != first.mesh) {
            return Err(Error::InvalidArgument("all levels must share mesh and component count".into()));
        }
        Ok(Self { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[NodalField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &NodalField {
        &self.fields[0]
    }

    pub fn last(&self) -> &NodalField {
        self.fields.last().expect("nonempty")
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.fields[0].mesh()
    }

    pub fn components(&self) -> usize {
        self.fields[0].components()
    }
}
