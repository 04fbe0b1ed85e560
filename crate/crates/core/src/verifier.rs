//! Convex hull checks for discrete solutions.
//!
//! The hull is built from nodal samples: the boundary trace for elliptic
//! fields, and the initial slice together with the lateral trace of every
//! level for trajectories. Violations are Euclidean distances to that hull,
//! whatever metric the solver worked in.

use serde::Serialize;

use crate::discretization::{NodalField, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, metric_project, violation_distance, ConvexPolytope, MetricMatrix};

/// Tolerance for linear problems.
pub const CHP_TOL: f64 = 1e-7;

/// Tolerance for Picard-linearized problems, `1e-6 (1 + |u0|_inf)`.
pub fn nonlinear_tolerance(initial: &NodalField) -> f64 {
    1e-6 * (1.0 + initial.max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChpReport {
    pub hull: ConvexPolytope,
    /// Distances per time level (one level for elliptic fields), per node.
    pub distances: Vec<Vec<f64>>,
    pub max_violation: f64,
    pub argmax_node: usize,
    /// Level and time of the maximum; `None` for elliptic fields.
    pub argmax_level: Option<usize>,
    pub argmax_time: Option<f64>,
    pub eta_series: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub tolerance: f64,
}

/// The JSON-facing part of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub hull_vertices: Vec<Vec<f64>>,
    pub max_violation: f64,
    pub argmax_node: usize,
    pub argmax_time: Option<f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
}

impl ChpReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            hull_vertices: self.hull.to_vec(),
            max_violation: self.max_violation,
            argmax_node: self.argmax_node,
            argmax_time: self.argmax_time,
            verdict: self.verdict,
            tolerance: self.tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Same distances judged at another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = judge(self.max_violation, tolerance);
        self
    }
}

fn judge(max_violation: f64, tolerance: f64) -> Verdict {
    if max_violation <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Hull of the values at the boundary nodes.
pub fn boundary_hull_elliptic(field: &NodalField) -> Result<ConvexPolytope> {
    convex_hull(&field.boundary_values())
}

/// Hull of the initial values, the lateral values at every level and,
/// if `include_zero`, the origin.
pub fn boundary_hull_parabolic(traj: &Trajectory, include_zero: bool) -> Result<ConvexPolytope> {
    let init = traj.initial();
    let mut samples: Vec<&[f64]> = (0..init.mesh().node_count()).map(|i| init.value(i)).collect();
    for f in &traj.fields()[1..] {
        samples.extend(f.boundary_values());
    }
    let origin = vec![0.0; traj.components()];
    if include_zero {
        samples.push(&origin);
    }
    convex_hull(&samples)
}

fn check_dims(hull: &ConvexPolytope, components: usize) -> Result<()> {
    if hull.dim() != components {
        return Err(Error::DimensionMismatch { expected: components, found: hull.dim() });
    }
    Ok(())
}

fn level_distances(field: &NodalField, hull: &ConvexPolytope) -> Result<Vec<f64>> {
    (0..field.mesh().node_count())
        .map(|i| violation_distance(field.value(i), hull))
        .collect()
}

/// Distances of every node of `field` to `hull`.
pub fn verify_field(field: &NodalField, hull: &ConvexPolytope, tolerance: f64) -> Result<ChpReport> {
    check_dims(hull, field.components())?;
    let d = level_distances(field, hull)?;
    let (argmax_node, max_violation) = argmax(&d);
    Ok(ChpReport {
        hull: hull.clone(),
        distances: vec![d],
        max_violation,
        argmax_node,
        argmax_level: None,
        argmax_time: None,
        eta_series: Vec::new(),
        verdict: judge(max_violation, tolerance),
        tolerance,
    })
}

/// Distances of every space-time node, plus the defect energy series.
pub fn verify_trajectory(traj: &Trajectory, hull: &ConvexPolytope, tolerance: f64) -> Result<ChpReport> {
    check_dims(hull, traj.components())?;
    let distances = traj
        .fields()
        .iter()
        .map(|f| level_distances(f, hull))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0, 0, 0.0);
    for (k, d) in distances.iter().enumerate() {
        let (i, v) = argmax(d);
        if v > best.2 {
            best = (k, i, v);
        }
    }
    let (level, node, max_violation) = best;
    Ok(ChpReport {
        hull: hull.clone(),
        distances,
        max_violation,
        argmax_node: node,
        argmax_level: Some(level),
        argmax_time: Some(traj.times()[level]),
        eta_series: eta_series(traj, hull)?,
        verdict: judge(max_violation, tolerance),
        tolerance,
    })
}

/// First index of the largest entry.
fn argmax(d: &[f64]) -> (usize, f64) {
    d.iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
}

/// `eta(t_k) = 1/2 sum_i m_i |u_k(i) - Pi u_k(i)|^2` with lumped weights.
pub fn eta_series(traj: &Trajectory, hull: &ConvexPolytope) -> Result<Vec<(f64, f64)>> {
    check_dims(hull, traj.components())?;
    let metric = MetricMatrix::identity(hull.dim());
    let mass = traj.mesh().lumped_mass();
    traj.times()
        .iter()
        .zip(traj.fields())
        .map(|(&t, f)| {
            let mut eta = 0.0;
            for (i, m) in mass.iter().enumerate() {
                let p = metric_project(f.value(i), hull, &metric)?;
                eta += 0.5 * m * p.distance * p.distance;
            }
            Ok((t, eta))
        })
        .collect()
}
