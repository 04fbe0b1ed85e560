//! Typed scenarios and the presets they refer to. See `docs/config.md`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use chp::discretization::{interval_mesh, rect_mesh, Mesh, NodalField};
use chp::elliptic::{DirichletData, EllipticCoefficients, MatrixField};
use chp::geometry::MetricMatrix;
use chp::nalgebra::DMatrix;
use chp::parabolic::{
    advection_preset, p_laplace_preset, reaction_preset, ParabolicCoefficients, ParabolicScenario, DEFAULT_EPSILON,
};

use crate::config::RawConfig;
use crate::error::{CliError, Result};

const KEYS: &[&str] = &[
    "kind",
    "expect",
    "mesh.cells",
    "mesh.cells_x",
    "mesh.cells_y",
    "mesh.domain",
    "mesh.x",
    "mesh.y",
    "coefficients.preset",
    "coefficients.coupling",
    "coefficients.diffusion",
    "coefficients.anisotropy",
    "coefficients.angle",
    "coefficients.amplitude",
    "coefficients.p",
    "coefficients.epsilon",
    "coefficients.growth",
    "coefficients.direction",
    "coefficients.c",
    "coefficients.a1",
    "coefficients.a2",
    "coefficients.ell",
    "data.components",
    "data.boundary",
    "data.initial",
    "data.value",
    "time.t_final",
    "time.dt",
    "verify.tolerance",
    "verify.include_zero",
    "verify.input",
    "verify.hull",
    "convergence.study",
    "convergence.cells",
    "convergence.dt",
    "output.dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Interval { a: f64, b: f64, cells: usize },
    Rectangle { x: (f64, f64), y: (f64, f64), cells_x: usize, cells_y: usize },
}

impl MeshSpec {
    pub fn build(&self) -> Result<Arc<Mesh>> {
        Ok(Arc::new(match *self {
            MeshSpec::Interval { a, b, cells } => interval_mesh(a, b, cells)?,
            MeshSpec::Rectangle { x, y, cells_x, cells_y } => rect_mesh(x, y, cells_x, cells_y)?,
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Identity,
    /// Constant `R(angle) diag(1, ratio) R(angle)^T`.
    Anisotropic { ratio: f64, angle: f64 },
    /// `(1 + amplitude sin(2 pi x_1) sin(2 pi x_2)) I`.
    Oscillating { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPreset {
    Linear,
    Trig,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPreset {
    Sine,
    Curve,
    Constant(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lateral {
    Initial,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParabolicPreset {
    Heat,
    PLaplace { p: f64, epsilon: f64 },
    Advection { growth: f64, direction: Vec<f64> },
    Reaction { c: f64 },
}

impl ParabolicPreset {
    pub fn coefficients(&self) -> Result<ParabolicCoefficients> {
        Ok(match self {
            ParabolicPreset::Heat => ParabolicCoefficients::heat(),
            ParabolicPreset::PLaplace { p, epsilon } => p_laplace_preset(*p, *epsilon)?,
            ParabolicPreset::Advection { growth, direction } => advection_preset(*growth, direction.clone())?,
            ParabolicPreset::Reaction { c } => reaction_preset(*c)?,
        })
    }

    /// Picard-linearized presets get the looser tolerance.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            ParabolicPreset::PLaplace { p, .. } => *p != 2.0,
            ParabolicPreset::Advection { .. } => true,
            ParabolicPreset::Heat | ParabolicPreset::Reaction { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    /// Mesh refinement for the elliptic counterexample.
    CounterexampleElliptic { ell: f64, cells: Vec<usize> },
    /// Step halving for the heat equation on `(0, pi)` with `sin x` data.
    Heat { cells: usize, t_final: f64, steps: Vec<f64> },
}

#[derive(Debug, Clone)]
pub enum Spec {
    Elliptic { mesh: MeshSpec, coupling: MetricMatrix, diffusion: Diffusion, boundary: BoundaryPreset },
    Parabolic {
        mesh: MeshSpec,
        components: usize,
        preset: ParabolicPreset,
        initial: InitialPreset,
        lateral: Lateral,
        t_final: f64,
        dt: f64,
    },
    CounterexampleElliptic { ell: f64, cells: usize },
    CounterexampleParabolic { a1: f64, a2: f64, cells: usize, t_final: f64, dt: f64 },
    Convergence(Study),
    Verify { input: PathBuf, hull: Option<PathBuf> },
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub spec: Spec,
    pub expect: Expect,
    pub tolerance: Option<f64>,
    pub include_zero: bool,
    pub output: Option<PathBuf>,
}

fn positive(cfg: &RawConfig, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg.invalid(key, format!("must be positive, got {v}")))
    }
}

fn pair(cfg: &RawConfig, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    match cfg.list::<f64>(key)? {
        None => Ok(default),
        Some(v) if v.len() == 2 && v[0] < v[1] => Ok((v[0], v[1])),
        Some(_) => Err(cfg.invalid(key, "expected `lo, hi` with lo < hi")),
    }
}

fn mesh_spec(cfg: &RawConfig) -> Result<MeshSpec> {
    if cfg.has("mesh.cells_x") || cfg.has("mesh.cells_y") {
        Ok(MeshSpec::Rectangle {
            x: pair(cfg, "mesh.x", (0.0, 1.0))?,
            y: pair(cfg, "mesh.y", (0.0, 1.0))?,
            cells_x: cfg.required("mesh.cells_x")?,
            cells_y: cfg.required("mesh.cells_y")?,
        })
    } else {
        let (a, b) = pair(cfg, "mesh.domain", (0.0, 1.0))?;
        Ok(MeshSpec::Interval { a, b, cells: cfg.required("mesh.cells")? })
    }
}

fn word<T>(cfg: &RawConfig, key: &str, default: &str, options: &[(&str, T)]) -> Result<T>
where
    T: Clone,
{
    let v = cfg.str(key).unwrap_or(default);
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| t.clone())
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            cfg.invalid(key, format!("unknown value {v:?}; expected one of {}", names.join(", ")))
        })
}

fn time(cfg: &RawConfig, t_default: Option<f64>, dt_default: Option<f64>) -> Result<(f64, f64)> {
    let t_final = match t_default {
        Some(d) => cfg.or("time.t_final", d)?,
        None => cfg.required("time.t_final")?,
    };
    let dt = match dt_default {
        Some(d) => cfg.or("time.dt", d)?,
        None => cfg.required("time.dt")?,
    };
    positive(cfg, "time.t_final", t_final)?;
    positive(cfg, "time.dt", dt)?;
    if dt > t_final {
        return Err(cfg.invalid("time.dt", "exceeds time.t_final"));
    }
    Ok((t_final, dt))
}

impl ScenarioConfig {
    pub fn from_raw(cfg: &RawConfig) -> Result<Self> {
        cfg.check_keys(KEYS)?;
        let kind = cfg.required_str("kind")?;
        let spec = match kind {
            "elliptic" => {
                let coupling = match cfg.matrix("coefficients.coupling")? {
                    Some(rows) => {
                        let n = rows.len();
                        MetricMatrix::from_row_slice(n, &rows.concat())
                            .map_err(|e| cfg.invalid("coefficients.coupling", e.to_string()))?
                    }
                    None => MetricMatrix::identity(cfg.or("data.components", 2)?),
                };
                let diffusion = match cfg.str("coefficients.diffusion").unwrap_or("identity") {
                    "identity" => Diffusion::Identity,
                    "anisotropic" => Diffusion::Anisotropic {
                        ratio: positive(cfg, "coefficients.anisotropy", cfg.or("coefficients.anisotropy", 4.0)?)?,
                        angle: cfg.or("coefficients.angle", PI / 6.0)?,
                    },
                    "oscillating" => {
                        let amplitude: f64 = cfg.or("coefficients.amplitude", 0.5)?;
                        if !(0.0..1.0).contains(&amplitude) {
                            return Err(cfg.invalid("coefficients.amplitude", "must lie in [0, 1)"));
                        }
                        Diffusion::Oscillating { amplitude }
                    }
                    other => {
                        return Err(cfg.invalid(
                            "coefficients.diffusion",
                            format!("unknown value {other:?}; expected identity, anisotropic or oscillating"),
                        ))
                    }
                };
                let boundary = word(
                    cfg,
                    "data.boundary",
                    "trig",
                    &[("linear", BoundaryPreset::Linear), ("trig", BoundaryPreset::Trig), ("harmonic", BoundaryPreset::Harmonic)],
                )?;
                let mesh = mesh_spec(cfg)?;
                if boundary == BoundaryPreset::Harmonic && !matches!(mesh, MeshSpec::Rectangle { .. }) {
                    return Err(cfg.invalid("data.boundary", "harmonic data needs a 2D mesh"));
                }
                if let Diffusion::Anisotropic { .. } = diffusion {
                    if !matches!(mesh, MeshSpec::Rectangle { .. }) {
                        return Err(cfg.invalid("coefficients.diffusion", "anisotropic diffusion needs a 2D mesh"));
                    }
                }
                Spec::Elliptic { mesh, coupling, diffusion, boundary }
            }
            "parabolic" => {
                let components: usize = cfg.or("data.components", 2)?;
                if components == 0 {
                    return Err(cfg.invalid("data.components", "must be at least 1"));
                }
                let preset = match cfg.str("coefficients.preset").unwrap_or("heat") {
                    "heat" => ParabolicPreset::Heat,
                    "p-laplace" => ParabolicPreset::PLaplace {
                        p: cfg.required("coefficients.p")?,
                        epsilon: cfg.or("coefficients.epsilon", DEFAULT_EPSILON)?,
                    },
                    "advection" => ParabolicPreset::Advection {
                        growth: cfg.or("coefficients.growth", 0.5)?,
                        direction: cfg.list("coefficients.direction")?.unwrap_or_else(|| vec![1.0]),
                    },
                    "reaction" => ParabolicPreset::Reaction { c: cfg.or("coefficients.c", 1.0)? },
                    other => {
                        return Err(cfg.invalid(
                            "coefficients.preset",
                            format!("unknown value {other:?}; expected heat, p-laplace, advection or reaction"),
                        ))
                    }
                };
                preset.coefficients().map_err(|e| cfg.invalid("coefficients.preset", e.to_string()))?;
                let initial = match cfg.str("data.initial").unwrap_or("sine") {
                    "sine" => InitialPreset::Sine,
                    "curve" => InitialPreset::Curve,
                    "constant" => {
                        let v: Vec<f64> = cfg
                            .list("data.value")?
                            .ok_or_else(|| CliError::Input("missing required key `data.value`".into()))?;
                        if v.len() != components {
                            return Err(cfg.invalid("data.value", format!("expected {components} entries")));
                        }
                        InitialPreset::Constant(v)
                    }
                    other => {
                        return Err(cfg.invalid(
                            "data.initial",
                            format!("unknown value {other:?}; expected sine, curve or constant"),
                        ))
                    }
                };
                let lateral = word(cfg, "data.boundary", "initial", &[("initial", Lateral::Initial), ("zero", Lateral::Zero)])?;
                let (t_final, dt) = time(cfg, None, None)?;
                let mesh = mesh_spec(cfg)?;
                if let ParabolicPreset::Advection { direction, .. } = &preset {
                    let dim = if matches!(mesh, MeshSpec::Rectangle { .. }) { 2 } else { 1 };
                    if direction.len() != dim {
                        return Err(cfg.invalid("coefficients.direction", format!("expected {dim} entries")));
                    }
                }
                Spec::Parabolic { mesh, components, preset, initial, lateral, t_final, dt }
            }
            "counterexample-elliptic" => {
                Spec::CounterexampleElliptic { ell: cfg.or("coefficients.ell", 0.9)?, cells: cfg.or("mesh.cells", 512)? }
            }
            "counterexample-parabolic" => {
                let (t_final, dt) = time(cfg, Some(1.0), Some(1e-3))?;
                Spec::CounterexampleParabolic {
                    a1: cfg.or("coefficients.a1", 1.0)?,
                    a2: cfg.or("coefficients.a2", 2.0)?,
                    cells: cfg.or("mesh.cells", 256)?,
                    t_final,
                    dt,
                }
            }
            "convergence" => Spec::Convergence(match cfg.required_str("convergence.study")? {
                "counterexample-elliptic" => Study::CounterexampleElliptic {
                    ell: cfg.or("coefficients.ell", 0.9)?,
                    cells: cfg.list("convergence.cells")?.unwrap_or_else(|| vec![64, 128, 256, 512]),
                },
                "heat" => {
                    let steps: Vec<f64> =
                        cfg.list("convergence.dt")?.unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
                    for &s in &steps {
                        positive(cfg, "convergence.dt", s)?;
                    }
                    Study::Heat { cells: cfg.or("mesh.cells", 512)?, t_final: cfg.or("time.t_final", 0.5)?, steps }
                }
                other => {
                    return Err(cfg.invalid(
                        "convergence.study",
                        format!("no closed-form oracle for {other:?}; expected counterexample-elliptic or heat"),
                    ))
                }
            }),
            "verify" => Spec::Verify {
                input: cfg
                    .path("verify.input")
                    .ok_or_else(|| CliError::Input("missing required key `verify.input`".into()))?,
                hull: cfg.path("verify.hull"),
            },
            other => return Err(cfg.invalid("kind", format!("unknown scenario kind {other:?}"))),
        };
        let counterexample = matches!(spec, Spec::CounterexampleElliptic { .. } | Spec::CounterexampleParabolic { .. });
        let expect = word(
            cfg,
            "expect",
            if counterexample { "fail" } else { "pass" },
            &[("pass", Expect::Pass), ("fail", Expect::Fail)],
        )?;
        let tolerance = cfg.get::<f64>("verify.tolerance")?;
        if let Some(t) = tolerance {
            if !(t >= 0.0) {
                return Err(cfg.invalid("verify.tolerance", "must be nonnegative"));
            }
        }
        Ok(Self {
            spec,
            expect,
            tolerance,
            include_zero: cfg.or("verify.include_zero", false)?,
            output: cfg.str("output.dir").map(PathBuf::from),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }
}

pub fn diffusion_field(d: &Diffusion, dim: usize) -> (MatrixField, f64) {
    match *d {
        Diffusion::Identity => (EllipticCoefficients::identity_diffusion(dim), 1.0),
        Diffusion::Anisotropic { ratio, angle } => {
            let (c, s) = (angle.cos(), angle.sin());
            let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let a = &r * DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, ratio]) * r.transpose();
            let a = (&a + a.transpose()) * 0.5;
            (Arc::new(move |_: &[f64]| a.clone()), ratio.min(1.0))
        }
        Diffusion::Oscillating { amplitude } => {
            let field = EllipticCoefficients::scalar_diffusion(dim, move |x: &[f64]| {
                1.0 + amplitude * x.iter().map(|v| (2.0 * PI * v).sin()).product::<f64>()
            });
            (field, 1.0 - amplitude)
        }
    }
}

/// Elliptic boundary data presets.
pub fn boundary_value(preset: BoundaryPreset, mesh: &Mesh, components: usize, x: &[f64]) -> Vec<f64> {
    match preset {
        BoundaryPreset::Linear => (0..components)
            .map(|a| x.iter().enumerate().map(|(d, v)| (1 + a + d) as f64 * v).sum::<f64>() + a as f64)
            .collect(),
        BoundaryPreset::Trig => {
            let theta = match mesh.dim() {
                1 => {
                    let (lo, hi) = (mesh.node(0)[0], mesh.node(mesh.node_count() - 1)[0]);
                    2.0 * PI * (x[0] - lo) / (hi - lo) * 0.3
                }
                _ => {
                    let last = mesh.node(mesh.node_count() - 1);
                    let first = mesh.node(0);
                    (x[1] - 0.5 * (first[1] + last[1])).atan2(x[0] - 0.5 * (first[0] + last[0]))
                }
            };
            (0..components)
                .map(|a| {
                    let k = (a + 1) as f64;
                    (k * theta + 0.7 * a as f64).cos() + 0.5 * ((k + 1.0) * theta).sin()
                })
                .collect()
        }
        BoundaryPreset::Harmonic => (0..components)
            .map(|a| match a {
                0 => x[0] * x[0] - x[1] * x[1],
                1 => 2.0 * x[0] * x[1],
                _ => x[0] + a as f64 * x[1],
            })
            .collect(),
    }
}

pub fn elliptic_data(mesh: &Mesh, components: usize, preset: BoundaryPreset) -> Result<DirichletData> {
    Ok(DirichletData::from_fn(mesh, components, |x| boundary_value(preset, mesh, components, x))?)
}

/// Parabolic initial data presets.
pub fn initial_field(mesh: &Arc<Mesh>, components: usize, preset: &InitialPreset) -> Result<NodalField> {
    let last = mesh.node(mesh.node_count() - 1).to_vec();
    let first = mesh.node(0).to_vec();
    let f = |x: &[f64]| -> Vec<f64> {
        match preset {
            InitialPreset::Sine => {
                let v: f64 = (0..x.len()).map(|d| (PI * (x[d] - first[d]) / (last[d] - first[d])).sin()).product();
                vec![v; components]
            }
            InitialPreset::Curve => {
                let s: f64 = x.iter().sum();
                (0..components)
                    .map(|a| match a {
                        0 => (3.0 * s).cos() * (1.0 + s),
                        1 => (4.0 * s).sin() + 0.5 * s * s,
                        _ => ((a + 2) as f64 * s).cos(),
                    })
                    .collect()
            }
            InitialPreset::Constant(v) => v.clone(),
        }
    };
    Ok(NodalField::from_fn(mesh.clone(), components, f)?)
}

pub fn parabolic_scenario(
    mesh: &MeshSpec,
    components: usize,
    preset: &ParabolicPreset,
    initial: &InitialPreset,
    lateral: Lateral,
    t_final: f64,
    dt: f64,
) -> Result<ParabolicScenario> {
    let mesh = mesh.build()?;
    let init = initial_field(&mesh, components, initial)?;
    let bc = match lateral {
        Lateral::Initial => ParabolicScenario::frozen_boundary(&init),
        Lateral::Zero => ParabolicScenario::zero_boundary(components),
    };
    Ok(ParabolicScenario::new(preset.coefficients()?, t_final, dt, init, bc)?)
}
