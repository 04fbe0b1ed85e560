//! Implicit Euler for
//!
//! ```text
//! du/dt - div(a0 (I (x) a) grad u) + b . grad u + c u = 0
//! ```
//!
//! with Dirichlet data on the lateral boundary and an initial field. The
//! scalar coefficients `a0`, `b`, `c` may depend on `(t, x, u, grad u)`;
//! each time step runs a Picard loop in which they are frozen at the
//! previous iterate, leaving one linear system per component.
//!
//! The time derivative and the reaction term use the lumped (row-sum) mass
//! matrix. The advection term is the elementwise-constant `b . grad u`
//! tested against the P1 basis, without stabilization.
//!
//! An optional constant diagonal `diag(r_1, ..., r_N)` replaces the identity
//! coupling. That mode exists only to reproduce the diagonal counterexample.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::discretization::{interval_mesh, Mesh, NodalField, Trajectory};
use crate::elliptic::{check_diffusion, solve_linear};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::oracles::ParabolicCounterexample;

pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX_ITER: usize = 100;
/// Default regularization of the p-Laplace coefficient.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Arguments of the state-dependent coefficients, sampled at an element
/// barycenter.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientArgs<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub u: &'a [f64],
    /// `N x dim` gradient, row-major.
    pub grad: &'a [f64],
}

impl CoefficientArgs<'_> {
    /// Squared Frobenius norm of the gradient.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum()
    }
}

pub type ScalarCoefficient = Arc<dyn Fn(&CoefficientArgs) -> f64 + Send + Sync>;
pub type VectorCoefficient = Arc<dyn Fn(&CoefficientArgs) -> Vec<f64> + Send + Sync>;
pub type DiffusionField = Arc<dyn Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ParabolicCoefficients {
    a0: ScalarCoefficient,
    a: DiffusionField,
    b: Option<VectorCoefficient>,
    c: Option<ScalarCoefficient>,
    lambda: f64,
    growth: f64,
    p: Option<f64>,
    rates: Option<Vec<f64>>,
}

impl std::fmt::Debug for ParabolicCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParabolicCoefficients")
            .field("advection", &self.b.is_some())
            .field("reaction", &self.c.is_some())
            .field("lambda", &self.lambda)
            .field("growth", &self.growth)
            .field("p", &self.p)
            .field("rates", &self.rates)
            .finish()
    }
}

fn identity_diffusion() -> DiffusionField {
    Arc::new(|_t: f64, x: &[f64]| DMatrix::identity(x.len(), x.len()))
}

impl ParabolicCoefficients {
    /// General coefficients; `lambda` is the ellipticity floor of `a`.
    pub fn new(a0: ScalarCoefficient, a: DiffusionField, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("ellipticity floor must be positive".into()));
        }
        Ok(Self { a0, a, b: None, c: None, lambda, growth: 1.0, p: None, rates: None })
    }

    /// `a0 = 1`, `a = I`, `b = 0`, `c = 0`.
    pub fn heat() -> Self {
        Self::new(Arc::new(|_: &CoefficientArgs| 1.0), identity_diffusion(), 1.0).expect("valid constants")
    }

    /// Advection `b` with the growth bound `|b| <= growth * sqrt(a0)`.
    pub fn with_advection(mut self, b: VectorCoefficient, growth: f64) -> Self {
        self.b = Some(b);
        self.growth = growth;
        self
    }

    /// Reaction coefficient `c >= 0`.
    pub fn with_reaction(mut self, c: ScalarCoefficient) -> Self {
        self.c = Some(c);
        self
    }

    /// Replaces the identity coupling by `diag(rates)`.
    pub fn with_component_rates(mut self, rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("component rates must be positive".into()));
        }
        self.rates = Some(rates);
        Ok(self)
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn has_reaction(&self) -> bool {
        self.c.is_some()
    }

    pub fn has_advection(&self) -> bool {
        self.b.is_some()
    }

    pub fn component_rates(&self) -> Option<&[f64]> {
        self.rates.as_deref()
    }

    pub fn a0(&self, args: &CoefficientArgs) -> f64 {
        (self.a0)(args)
    }
}

/// `a0 = (|G|^2 + epsilon)^((p-2)/2)`, `a = I`, `b = 0`, `c = 0`.
pub fn p_laplace_preset(p: f64, epsilon: f64) -> Result<ParabolicCoefficients> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p-Laplace exponent must exceed 1, got {p}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument("regularization must be nonnegative".into()));
    }
    let exponent = 0.5 * (p - 2.0);
    let a0: ScalarCoefficient = Arc::new(move |args: &CoefficientArgs| (args.grad_norm_sq() + epsilon).powf(exponent));
    let mut c = ParabolicCoefficients::new(a0, identity_diffusion(), 1.0)?;
    c.p = Some(p);
    Ok(c)
}

/// `a0 = 1 + |u|^2`, `b = k sqrt(a0) e` for a unit vector `e`, with growth
/// constant `C = k`.
pub fn advection_preset(k: f64, direction: Vec<f64>) -> Result<ParabolicCoefficients> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(k >= 0.0) || !k.is_finite() || !(norm > 0.0) {
        return Err(Error::InvalidArgument("advection needs k >= 0 and a nonzero direction".into()));
    }
    let e: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let a0 = |args: &CoefficientArgs| 1.0 + args.u.iter().map(|v| v * v).sum::<f64>();
    let b: VectorCoefficient = Arc::new(move |args: &CoefficientArgs| {
        let s = k * a0(args).sqrt();
        e.iter().map(|v| s * v).collect()
    });
    Ok(ParabolicCoefficients::new(Arc::new(a0), identity_diffusion(), 1.0)?.with_advection(b, k))
}

/// Heat flow with constant reaction `c >= 0`.
pub fn reaction_preset(c: f64) -> Result<ParabolicCoefficients> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("reaction coefficient must be nonnegative, got {c}")));
    }
    Ok(ParabolicCoefficients::heat().with_reaction(Arc::new(move |_: &CoefficientArgs| c)))
}

/// Problem data on `(0, T] x Omega`.
#[derive(Clone)]
pub struct ParabolicScenario {
    pub mesh: Arc<Mesh>,
    pub coefficients: ParabolicCoefficients,
    pub t_final: f64,
    pub dt: f64,
    pub initial: NodalField,
    pub boundary: BoundaryFn,
}

impl ParabolicScenario {
    pub fn new(
        coefficients: ParabolicCoefficients,
        t_final: f64,
        dt: f64,
        initial: NodalField,
        boundary: BoundaryFn,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument("time step must be positive".into()));
        }
        if !(t_final >= dt) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("final time {t_final} is shorter than the step {dt}")));
        }
        if let Some(r) = &coefficients.rates {
            if r.len() != initial.components() {
                return Err(Error::DimensionMismatch { expected: initial.components(), found: r.len() });
            }
        }
        Ok(Self { mesh: initial.mesh().clone(), coefficients, t_final, dt, initial, boundary })
    }

    /// Lateral data constant in time, equal to the initial trace.
    pub fn frozen_boundary(initial: &NodalField) -> BoundaryFn {
        let mesh = initial.mesh().clone();
        let lookup: Vec<(Vec<f64>, Vec<f64>)> = mesh
            .boundary_nodes()
            .iter()
            .map(|&b| (mesh.node(b).to_vec(), initial.value(b).to_vec()))
            .collect();
        let n = initial.components();
        Arc::new(move |_t: f64, x: &[f64]| {
            lookup
                .iter()
                .find(|(p, _)| p.as_slice() == x)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| vec![0.0; n])
        })
    }

    /// Zero lateral data.
    pub fn zero_boundary(components: usize) -> BoundaryFn {
        Arc::new(move |_t: f64, _x: &[f64]| vec![0.0; components])
    }

    /// Time levels `0 = t_0 < ... < t_M = T`; the last step is shortened
    /// when `T` is not a multiple of `dt`.
    pub fn time_grid(&self) -> Vec<f64> {
        let steps = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * self.dt).collect();
        times.push(self.t_final);
        times
    }

    fn boundary_at(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.initial.components();
        self.mesh
            .boundary_nodes()
            .iter()
            .map(|&b| {
                let v = (self.boundary)(t, self.mesh.node(b));
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument(format!("boundary data not finite at t = {t}")));
                }
                Ok(v)
            })
            .collect()
    }
}

/// Per-element coefficient samples for one Picard iterate.
struct FrozenCoefficients {
    a0: Vec<f64>,
    a: Vec<DMatrix<f64>>,
    b: Option<Vec<Vec<f64>>>,
    c: Option<Vec<f64>>,
}

fn freeze(coeffs: &ParabolicCoefficients, iterate: &NodalField, t: f64) -> Result<FrozenCoefficients> {
    let mesh = iterate.mesh();
    let dim = mesh.dim();
    let ne = mesh.element_count();
    let mut grad = vec![0.0; iterate.components() * dim];
    let mut out = FrozenCoefficients {
        a0: Vec::with_capacity(ne),
        a: Vec::with_capacity(ne),
        b: coeffs.b.as_ref().map(|_| Vec::with_capacity(ne)),
        c: coeffs.c.as_ref().map(|_| Vec::with_capacity(ne)),
    };
    for e in 0..ne {
        let x = mesh.midpoint(e);
        let u = iterate.midpoint_value(e);
        iterate.gradient_into(e, &mut grad);
        let args = CoefficientArgs { t, x: &x, u: &u, grad: &grad };
        let a0 = (coeffs.a0)(&args);
        if !(a0 >= 0.0) || !a0.is_finite() {
            return Err(Error::Coefficient { element: e, reason: format!("a0 = {a0:e} must be finite and nonnegative") });
        }
        let a = (coeffs.a)(t, &x);
        check_diffusion(&a, dim, coeffs.lambda, e)?;
        if let (Some(bf), Some(store)) = (&coeffs.b, out.b.as_mut()) {
            let b = bf(&args);
            if b.len() != dim {
                return Err(Error::Coefficient { element: e, reason: format!("b must have {dim} entries") });
            }
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= coeffs.growth * a0.sqrt() + 1e-12) {
                return Err(Error::Coefficient {
                    element: e,
                    reason: format!("|b| = {norm:e} exceeds C sqrt(a0) = {:e}", coeffs.growth * a0.sqrt()),
                });
            }
            store.push(b);
        }
        if let (Some(cf), Some(store)) = (&coeffs.c, out.c.as_mut()) {
            let c = cf(&args);
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Coefficient { element: e, reason: format!("c = {c:e} must be finite and nonnegative") });
            }
            store.push(c);
        }
        out.a0.push(a0);
        out.a.push(a);
    }
    Ok(out)
}

/// `M/dt + rate K(a0 a) + B(b) + C(c)` for one component.
fn time_step_matrix(mesh: &Mesh, frozen: &FrozenCoefficients, dt: f64, rate: f64) -> CsrMatrix {
    let dim = mesh.dim();
    let per = dim + 1;
    let mut trip = Vec::with_capacity(mesh.element_count() * per * per + mesh.node_count());
    for (i, m) in mesh.lumped_mass().iter().enumerate() {
        trip.push((i, i, m / dt));
    }
    for e in 0..mesh.element_count() {
        let nodes = mesh.element(e);
        let vol = mesh.measure(e);
        let share = vol / per as f64;
        let a = &frozen.a[e];
        let diff = rate * frozen.a0[e] * vol;
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
                let mut v = diff * s;
                if let Some(b) = &frozen.b {
                    v += share * b[e].iter().zip(gj).map(|(p, q)| p * q).sum::<f64>();
                }
                trip.push((i, j, v));
            }
            if let Some(c) = &frozen.c {
                trip.push((i, i, share * c[e]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), trip)
}

/// One implicit Euler step from `state` at time `t` to `t + dt`.
pub fn step(state: &NodalField, t: f64, dt: f64, scenario: &ParabolicScenario) -> Result<NodalField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    let mesh = state.mesh();
    let n = state.components();
    let t_new = t + dt;
    let boundary = scenario.boundary_at(t_new)?;
    let interior = mesh.interior_nodes();
    let coeffs = &scenario.coefficients;
    let rates: Vec<f64> = coeffs.rates.clone().unwrap_or_else(|| vec![1.0; n]);
    if rates.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rates.len() });
    }
    let iterative = mesh.dim() == 2 && coeffs.b.is_none();

    let mut iterate = state.clone();
    for (k, &b) in mesh.boundary_nodes().iter().enumerate() {
        iterate.set_value(b, &boundary[k]);
    }
    let mut increment = f64::INFINITY;
    for _ in 0..PICARD_MAX_ITER {
        let frozen = freeze(coeffs, &iterate, t_new)?;
        let mut next = iterate.clone();
        let mut cache: Vec<(f64, CsrMatrix, CsrMatrix)> = Vec::new();
        for alpha in 0..n {
            let rate = rates[alpha];
            if !cache.iter().any(|(r, _, _)| *r == rate) {
                let full = time_step_matrix(mesh, &frozen, dt, rate);
                let reduced = full.submatrix(&interior);
                cache.push((rate, full, reduced));
            }
            let (_, full, reduced) = cache.iter().find(|(r, _, _)| *r == rate).unwrap();
            let mut lift = vec![0.0; mesh.node_count()];
            for (k, &b) in mesh.boundary_nodes().iter().enumerate() {
                lift[b] = boundary[k][alpha];
            }
            let k_lift = full.matvec(&lift);
            let mass = mesh.lumped_mass();
            let rhs: Vec<f64> = interior
                .iter()
                .map(|&i| mass[i] / dt * state.value(i)[alpha] - k_lift[i])
                .collect();
            let x = solve_linear(reduced, &rhs, iterative)?;
            let values = next.values_mut();
            for (&i, v) in interior.iter().zip(&x) {
                values[i * n + alpha] = *v;
            }
        }
        let diff: f64 = next.values().iter().zip(iterate.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let size: f64 = next.values().iter().map(|a| a * a).sum::<f64>().sqrt();
        increment = if size > 0.0 { diff / size } else { diff };
        iterate = next;
        if increment <= PICARD_TOL {
            return Ok(iterate);
        }
    }
    Err(Error::PicardNoConvergence { iterations: PICARD_MAX_ITER, increment })
}

/// All time levels. The boundary nodes of every level, the initial one
/// included, carry the prescribed data.
pub fn run(scenario: &ParabolicScenario) -> Result<Trajectory> {
    let times = scenario.time_grid();
    let mut first = scenario.initial.clone();
    let g0 = scenario.boundary_at(0.0)?;
    for (k, &b) in scenario.mesh.boundary_nodes().iter().enumerate() {
        first.set_value(b, &g0[k]);
    }
    let mut fields = Vec::with_capacity(times.len());
    fields.push(first);
    for w in times.windows(2) {
        let next = step(fields.last().unwrap(), w[0], w[1] - w[0], scenario)?;
        fields.push(next);
    }
    Trajectory::new(times, fields)
}

/// The diagonal counterexample on `(0, pi)`: initial `(sin x, sin x)`, zero
/// lateral data, coupling `diag(a1, a2)`.
pub fn counterexample_scenario(spec: &ParabolicCounterexample, cells: usize, dt: f64, t_final: f64) -> Result<ParabolicScenario> {
    let mesh = Arc::new(interval_mesh(0.0, PI, cells)?);
    let initial = NodalField::from_fn(mesh, 2, |x| vec![x[0].sin(); 2])?;
    let coeffs = ParabolicCoefficients::heat().with_component_rates(spec.rates().to_vec())?;
    ParabolicScenario::new(coeffs, t_final, dt, initial, ParabolicScenario::zero_boundary(2))
}
