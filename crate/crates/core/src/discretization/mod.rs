//! 1D interval meshes and 2D structured triangulations with P1 elements,
//! nodal fields, trajectories and their CSV dumps.

pub mod dump;
mod field;
mod mesh;

pub use field::{element_gradient, project_field, NodalField, Trajectory};
pub use mesh::{interval_mesh, rect_mesh, Mesh, MeshShape};
