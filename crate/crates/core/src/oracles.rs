//! Closed-form reference solutions.
//!
//! Two explicit counterexamples show that the structural assumptions of the
//! convex hull theorems cannot be dropped:
//!
//! * **Elliptic, `x`-dependent coupling.** On `(0, l)` with `l < 1`, the
//!   system `-(M(x) u')' = 0` with `M(x) = [[1, -x], [-x, 1]]` is uniformly
//!   elliptic and solved by `u = (log((1-x)/(1+x)), log(1-x^2))`. Since
//!   `u(0) = 0`, the hull of the boundary values is the segment from `0` to
//!   `u(l)`, and staying on it would force `u1/u2` to be constant. It is not.
//! * **Parabolic, diagonal non-identity coupling.** With
//!   `M = diag(a1, a2)`, `a1 != a2`, on `(0, pi)`, the solution
//!   `(e^{-a1 t} sin x, e^{-a2 t} sin x)` starts on the diagonal segment
//!   `{(s, s) : s in [0, 1]}` and leaves it immediately.
//!
//! Harmonic polynomials give exact componentwise-harmonic fields, which
//! satisfy the convex hull property for the Laplace system.
//!
//! A pointwise-varying metric projection `Pi_K^{M(x)}` does not rescue the
//! `x`-dependent case either. Take `u` locally constant: its gradient
//! vanishes while the gradient of its varying projection need not, so no
//! gradient inequality of the usual form can hold. This is noted only; no
//! construction is implemented for it.
//!
//! Nothing here shares code with the finite element assembly.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::discretization::{Mesh, NodalField};
use crate::elliptic::{EllipticCoefficients, MatrixField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticCounterexample {
    ell: f64,
}

impl EllipticCounterexample {
    /// `0 < ell < 1` keeps the coupling uniformly positive definite.
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell < 1.0) {
            return Err(Error::InvalidArgument(format!("domain length must lie in (0, 1), got {ell}")));
        }
        Ok(Self { ell })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `[[1, -x], [-x, 1]]`
    pub fn coupling(x: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -x, -x, 1.0])
    }

    /// Coupling field with `a = 1`; the ellipticity floor of `a` is 1.
    pub fn coefficients(&self) -> EllipticCoefficients {
        let coupling: MatrixField = Arc::new(|x: &[f64]| Self::coupling(x[0]));
        EllipticCoefficients::variable(2, coupling, EllipticCoefficients::identity_diffusion(1), 1.0)
            .expect("valid constants")
    }

    fn check(&self, x: f64) -> Result<()> {
        if !(0.0..=self.ell).contains(&x) {
            return Err(Error::InvalidArgument(format!("x = {x} outside [0, {}]", self.ell)));
        }
        Ok(())
    }

    /// `(log((1-x)/(1+x)), log(1-x^2))`
    pub fn exact(&self, x: f64) -> Result<[f64; 2]> {
        self.check(x)?;
        Ok(Self::formula(x))
    }

    fn formula(x: f64) -> [f64; 2] {
        [(-x).ln_1p() - x.ln_1p(), (-x * x).ln_1p()]
    }

    /// `(u1/u2)'` by its closed form,
    /// `(2(1+x)log(1+x) + 2(1-x)log(1-x)) / ((x^2-1)(log(1-x)+log(1+x))^2)`.
    /// Excludes `x = 0`, where `u1/u2` is a `0/0` form.
    pub fn ratio_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < self.ell) {
            return Err(Error::InvalidArgument(format!("x = {x} outside (0, {})", self.ell)));
        }
        let (lp, lm) = (x.ln_1p(), (-x).ln_1p());
        let num = 2.0 * (1.0 + x) * lp + 2.0 * (1.0 - x) * lm;
        let s = lm + lp;
        Ok(num / ((x * x - 1.0) * s * s))
    }

    /// Boundary values `u(0)` and `u(l)`.
    pub fn boundary_values(&self) -> [[f64; 2]; 2] {
        [Self::formula(0.0), Self::formula(self.ell)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicCounterexample {
    a1: f64,
    a2: f64,
}

impl ParabolicCounterexample {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0) || a1 == a2 {
            return Err(Error::InvalidArgument("need a1, a2 > 0 with a1 != a2".into()));
        }
        Ok(Self { a1, a2 })
    }

    pub fn rates(&self) -> [f64; 2] {
        [self.a1, self.a2]
    }

    /// `(e^{-a1 t} sin x, e^{-a2 t} sin x)` on `[0, inf) x [0, pi]`.
    pub fn exact(&self, t: f64, x: f64) -> Result<[f64; 2]> {
        if !(t >= 0.0) || !(0.0..=PI).contains(&x) {
            return Err(Error::InvalidArgument(format!("(t, x) = ({t}, {x}) outside [0, inf) x [0, pi]")));
        }
        let s = x.sin();
        Ok([(-self.a1 * t).exp() * s, (-self.a2 * t).exp() * s])
    }

    /// Distance of `u(t, x)` from the diagonal, `|u1 - u2| / sqrt 2`. For
    /// `t > 0` the projection onto the diagonal lands inside the unit
    /// segment, so this is the distance to the hull of the parabolic
    /// boundary values.
    pub fn violation(&self, t: f64, x: f64) -> Result<f64> {
        let [u1, u2] = self.exact(t, x)?;
        Ok((u1 - u2).abs() / 2f64.sqrt())
    }

    /// `1/2 int_0^pi |u - Pi_K u|^2 dx = (pi/8) (e^{-a1 t} - e^{-a2 t})^2`.
    pub fn eta(&self, t: f64) -> f64 {
        let d = (-self.a1 * t).exp() - (-self.a2 * t).exp();
        PI / 8.0 * d * d
    }
}

/// `c0 + cx x + cy y + cxx (x^2 - y^2) + cxy x y`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HarmonicPolynomial {
    pub constant: f64,
    pub x: f64,
    pub y: f64,
    pub x2_minus_y2: f64,
    pub xy: f64,
}

impl HarmonicPolynomial {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Default::default() }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let (x, y) = (p[0], p[1]);
        self.constant + self.x * x + self.y * y + self.x2_minus_y2 * (x * x - y * y) + self.xy * x * y
    }
}

/// Exact nodal values of a componentwise harmonic field on a 2D mesh.
pub fn harmonic_oracle(mesh: &Arc<Mesh>, components: &[HarmonicPolynomial]) -> Result<NodalField> {
    if mesh.dim() != 2 {
        return Err(Error::InvalidArgument("harmonic oracle needs a 2D mesh".into()));
    }
    NodalField::from_fn(mesh.clone(), components.len(), |p| components.iter().map(|h| h.eval(p)).collect())
}
