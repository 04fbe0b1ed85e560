//! Convex hulls of finite point sets and exact projections onto them under
//! arbitrary SPD inner products.

mod metric;
pub mod mnp;
mod polytope;
mod projection;

pub use metric::MetricMatrix;
pub use polytope::{convex_hull, ConvexPolytope, MAX_DIM};
pub use projection::{metric_project, violation_distance, ProjectionResult};
