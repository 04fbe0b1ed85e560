use crate::error::{Error, Result};

/// How a mesh was generated; kept so a mesh can be rebuilt from its node
/// coordinates alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshShape {
    Interval { a: f64, b: f64, cells: usize },
    Rectangle { x: (f64, f64), y: (f64, f64), cells_x: usize, cells_y: usize },
}

/// P1 mesh: segments in 1D, triangles in 2D.
///
/// Element measures, basis-function gradients and lumped (row-sum) mass
/// weights are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<usize>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
    measures: Vec<f64>,
    grads: Vec<f64>,
    lumped_mass: Vec<f64>,
    shape: MeshShape,
}

/// `M + 1` equispaced nodes on `[a, b]`.
pub fn interval_mesh(a: f64, b: f64, cells: usize) -> Result<Mesh> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidMesh("a < b required".into()));
    }
    if cells < 2 {
        return Err(Error::InvalidMesh("at least 2 cells required".into()));
    }
    let h = (b - a) / cells as f64;
    let mut coords: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
    coords[cells] = b;
    let elements = (0..cells).flat_map(|e| [e, e + 1]).collect();
    Mesh::build(1, coords, elements, vec![0, cells], MeshShape::Interval { a, b, cells })
}

/// Structured triangulation of `[x0, x1] x [y0, y1]`. Each cell is split
/// along the diagonal from its lower-left corner; nodes are numbered row by
/// row, `x` fastest.
pub fn rect_mesh(x: (f64, f64), y: (f64, f64), cells_x: usize, cells_y: usize) -> Result<Mesh> {
    let finite = [x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite());
    if !finite || x.0 >= x.1 || y.0 >= y.1 {
        return Err(Error::InvalidMesh("rectangle extents must be positive".into()));
    }
    if cells_x < 2 || cells_y < 2 {
        return Err(Error::InvalidMesh("at least 2 cells per direction required".into()));
    }
    let (nx, ny) = (cells_x + 1, cells_y + 1);
    let hx = (x.1 - x.0) / cells_x as f64;
    let hy = (y.1 - y.0) / cells_y as f64;
    let coord = |i: usize, n: usize, lo: f64, hi: f64, h: f64| if i == n { hi } else { lo + i as f64 * h };
    let mut coords = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            coords.push(coord(i, cells_x, x.0, x.1, hx));
            coords.push(coord(j, cells_y, y.0, y.1, hy));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut elements = Vec::with_capacity(6 * cells_x * cells_y);
    for j in 0..cells_y {
        for i in 0..cells_x {
            let (ll, lr, ur, ul) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.extend([ll, lr, ur, ll, ur, ul]);
        }
    }
    let boundary = (0..nx * ny)
        .filter(|&k| {
            let (i, j) = (k % nx, k / nx);
            i == 0 || j == 0 || i == cells_x || j == cells_y
        })
        .collect();
    Mesh::build(2, coords, elements, boundary, MeshShape::Rectangle { x, y, cells_x, cells_y })
}

impl Mesh {
    fn build(dim: usize, coords: Vec<f64>, elements: Vec<usize>, boundary: Vec<usize>, shape: MeshShape) -> Result<Self> {
        let n_nodes = coords.len() / dim;
        let per = dim + 1;
        let n_elem = elements.len() / per;
        if elements.iter().any(|&i| i >= n_nodes) {
            return Err(Error::InvalidMesh("element node index out of range".into()));
        }
        let mut measures = Vec::with_capacity(n_elem);
        let mut grads = Vec::with_capacity(n_elem * per * dim);
        let mut lumped_mass = vec![0.0; n_nodes];
        for e in 0..n_elem {
            let nodes = &elements[e * per..(e + 1) * per];
            let p = |k: usize| &coords[nodes[k] * dim..(nodes[k] + 1) * dim];
            let measure = if dim == 1 {
                let h = p(1)[0] - p(0)[0];
                grads.extend([-1.0 / h, 1.0 / h]);
                h
            } else {
                let (a, b, c) = (p(0), p(1), p(2));
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                for (q, r) in [(b, c), (c, a), (a, b)] {
                    grads.push((q[1] - r[1]) / det);
                    grads.push((r[0] - q[0]) / det);
                }
                0.5 * det
            };
            if !(measure > 0.0) {
                return Err(Error::InvalidMesh(format!("element {e} has nonpositive measure")));
            }
            measures.push(measure);
            for &i in nodes {
                lumped_mass[i] += measure / per as f64;
            }
        }
        let mut on_boundary = vec![false; n_nodes];
        for &b in &boundary {
            on_boundary[b] = true;
        }
        Ok(Self { dim, coords, elements, boundary, on_boundary, measures, grads, lumped_mass, shape })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> MeshShape {
        self.shape
    }

    pub fn node_count(&self) -> usize {
        self.on_boundary.len()
    }

    pub fn element_count(&self) -> usize {
        self.measures.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coords
    }

    /// Node indices of element `e` (counterclockwise for triangles).
    pub fn element(&self, e: usize) -> &[usize] {
        let per = self.dim + 1;
        &self.elements[e * per..(e + 1) * per]
    }

    pub fn measure(&self, e: usize) -> f64 {
        self.measures[e]
    }

    /// Gradient of the local basis function `k` on element `e`.
    pub fn basis_gradient(&self, e: usize, k: usize) -> &[f64] {
        let per = self.dim + 1;
        let start = (e * per + k) * self.dim;
        &self.grads[start..start + self.dim]
    }

    /// Element barycenter, where all coefficients are sampled.
    pub fn midpoint(&self, e: usize) -> Vec<f64> {
        let nodes = self.element(e);
        let mut m = vec![0.0; self.dim];
        for &i in nodes {
            for (mk, xk) in m.iter_mut().zip(self.node(i)) {
                *mk += xk;
            }
        }
        m.iter_mut().for_each(|v| *v /= nodes.len() as f64);
        m
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.on_boundary[i]).collect()
    }

    /// Row sums of the P1 mass matrix.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        match self.shape {
            MeshShape::Interval { a, b, cells } => (b - a) / cells as f64,
            MeshShape::Rectangle { x, y, cells_x, cells_y } => {
                let hx = (x.1 - x.0) / cells_x as f64;
                let hy = (y.1 - y.0) / cells_y as f64;
                hx.hypot(hy)
            }
        }
    }

    /// Rebuilds a generated mesh from node coordinates listed in mesh order.
    pub fn from_node_coordinates(dim: usize, coords: &[f64]) -> Result<Mesh> {
        let bad = || Error::InvalidMesh("coordinates do not form a generated interval or rectangle mesh".into());
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(bad());
        }
        let n = coords.len() / dim;
        let mesh = match dim {
            1 => interval_mesh(coords[0], coords[n - 1], n.saturating_sub(1))?,
            2 => {
                let cells_x = coords
                    .chunks_exact(2)
                    .skip(1)
                    .position(|p| p[0] <= coords[0])
                    .ok_or_else(bad)?;
                let nx = cells_x + 1;
                if n % nx != 0 {
                    return Err(bad());
                }
                let ny = n / nx;
                let x = (coords[0], coords[2 * cells_x]);
                let y = (coords[1], coords[2 * n - 1]);
                rect_mesh(x, y, cells_x, ny.saturating_sub(1))?
            }
            _ => return Err(bad()),
        };
        let scale = coords.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if mesh.coords.len() != coords.len()
            || mesh.coords.iter().zip(coords).any(|(a, b)| (a - b).abs() > 1e-12 * scale)
        {
            return Err(bad());
        }
        Ok(mesh)
    }
}
