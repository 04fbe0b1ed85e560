use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chp::discretization::dump::{format_number, read_field_file, read_trajectory, write_field_file, write_trajectory};
use chp::discretization::{interval_mesh, NodalField};
use chp::elliptic::{assemble, solve_dirichlet, DirichletData, EllipticCoefficients};
use chp::geometry::{convex_hull, ConvexPolytope};
use chp::oracles::{EllipticCounterexample, ParabolicCounterexample};
use chp::parabolic::{counterexample_scenario, run, ParabolicCoefficients, ParabolicScenario};
use chp::verifier::{
    boundary_hull_elliptic, boundary_hull_parabolic, nonlinear_tolerance, verify_field, verify_trajectory, ChpReport,
    Verdict, CHP_TOL,
};

use crate::config::RawConfig;
use crate::error::{CliError, Result};
use crate::scenario::{diffusion_field, elliptic_data, parabolic_scenario, Expect, ScenarioConfig, Spec, Study};

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub include_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h_or_dt: f64,
    pub error: f64,
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Report { report: ChpReport, expect: Expect },
    Convergence(Vec<ConvergenceRow>),
}

impl Outcome {
    /// 0 when the verdict is the expected one, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Report { report, expect } => {
                let expected = match expect {
                    Expect::Pass => Verdict::Pass,
                    Expect::Fail => Verdict::Fail,
                };
                i32::from(report.verdict != expected)
            }
            Outcome::Convergence(_) => 0,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_raw(&RawConfig::read(path)?)
}

fn out_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the scenario in `config` and writes its artifacts.
pub fn cmd_run(config: &Path, opts: &RunOptions) -> Result<(Outcome, PathBuf)> {
    let cfg = load_config(config)?;
    let dir = out_dir(&cfg, opts);
    let outcome = run_scenario(&cfg, &dir, opts)?;
    Ok((outcome, dir))
}

/// Refinement study of a `kind = convergence` config.
pub fn cmd_convergence(config: &Path, out: Option<&Path>) -> Result<(Vec<ConvergenceRow>, PathBuf)> {
    let cfg = load_config(config)?;
    let Spec::Convergence(study) = &cfg.spec else {
        return Err(CliError::Input("no closed-form oracle for this scenario; use `kind = convergence`".into()));
    };
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let rows = convergence_table(study)?;
    fs::create_dir_all(&dir)?;
    write_convergence(&rows, &dir.join("convergence.csv"))?;
    Ok((rows, dir))
}

pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path, opts: &RunOptions) -> Result<Outcome> {
    fs::create_dir_all(dir)?;
    let include_zero = opts.include_zero || cfg.include_zero;
    let tolerance = |default: f64| opts.tolerance.or(cfg.tolerance).unwrap_or(default);
    let report = match &cfg.spec {
        Spec::Elliptic { mesh, coupling, diffusion, boundary } => {
            let mesh = mesh.build()?;
            let (a, lambda) = diffusion_field(diffusion, mesh.dim());
            let coeffs = EllipticCoefficients::new(coupling.clone(), a, lambda)?;
            let bc = elliptic_data(&mesh, coupling.dim(), *boundary)?;
            let u = solve_dirichlet(&assemble(&mesh, &coeffs)?, &bc)?;
            elliptic_artifacts(&u, dir, tolerance(CHP_TOL))?
        }
        Spec::CounterexampleElliptic { ell, cells } => {
            let ex = EllipticCounterexample::new(*ell)?;
            let u = solve_elliptic_counterexample(&ex, *cells)?;
            elliptic_artifacts(&u, dir, tolerance(CHP_TOL))?
        }
        Spec::Parabolic { mesh, components, preset, initial, lateral, t_final, dt } => {
            let sc = parabolic_scenario(mesh, *components, preset, initial, *lateral, *t_final, *dt)?;
            let default = if preset.is_nonlinear() { nonlinear_tolerance(&sc.initial) } else { CHP_TOL };
            parabolic_artifacts(&sc, dir, tolerance(default), include_zero)?
        }
        Spec::CounterexampleParabolic { a1, a2, cells, t_final, dt } => {
            let ex = ParabolicCounterexample::new(*a1, *a2)?;
            let sc = counterexample_scenario(&ex, *cells, *dt, *t_final)?;
            parabolic_artifacts(&sc, dir, tolerance(CHP_TOL), include_zero)?
        }
        Spec::Convergence(study) => {
            let rows = convergence_table(study)?;
            write_convergence(&rows, &dir.join("convergence.csv"))?;
            return Ok(Outcome::Convergence(rows));
        }
        Spec::Verify { input, hull } => {
            let report = cmd_verify(input, hull.as_deref(), Some(tolerance(CHP_TOL)), include_zero)?;
            write_report_files(&report, dir)?;
            report
        }
    };
    Ok(Outcome::Report { report, expect: cfg.expect })
}

pub fn solve_elliptic_counterexample(ex: &EllipticCounterexample, cells: usize) -> Result<NodalField> {
    let mesh = Arc::new(interval_mesh(0.0, ex.ell(), cells)?);
    let [g0, g1] = ex.boundary_values();
    let bc = DirichletData::new(&mesh, 2, [g0, g1].concat())?;
    Ok(solve_dirichlet(&assemble(&mesh, &ex.coefficients())?, &bc)?)
}

fn elliptic_artifacts(u: &NodalField, dir: &Path, tolerance: f64) -> Result<ChpReport> {
    write_field_file(u, &dir.join("solution.csv"))?;
    let hull = boundary_hull_elliptic(u)?;
    let report = verify_field(u, &hull, tolerance)?;
    write_report_files(&report, dir)?;
    Ok(report)
}

fn parabolic_artifacts(sc: &ParabolicScenario, dir: &Path, tolerance: f64, include_zero: bool) -> Result<ChpReport> {
    let traj = run(sc)?;
    write_trajectory(&traj, &dir.join("trajectory"))?;
    let hull = boundary_hull_parabolic(&traj, include_zero)?;
    let report = verify_trajectory(&traj, &hull, tolerance)?;
    write_report_files(&report, dir)?;
    Ok(report)
}

/// `report.json`, `hull.csv`, and `eta.csv` when the report has a series.
pub fn write_report_files(report: &ChpReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report_json(report)?)?;
    write_hull(&report.hull, &dir.join("hull.csv"))?;
    if !report.eta_series.is_empty() {
        let mut f = fs::File::create(dir.join("eta.csv"))?;
        writeln!(f, "t,eta")?;
        for (t, eta) in &report.eta_series {
            writeln!(f, "{},{}", format_number(*t), format_number(*eta))?;
        }
    }
    Ok(())
}

pub fn report_json(report: &ChpReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&report.summary())? + "\n")
}

/// One vertex per row under the header `u_1,...,u_N`.
pub fn write_hull(hull: &ConvexPolytope, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    let header: Vec<String> = (1..=hull.dim()).map(|a| format!("u_{a}")).collect();
    writeln!(f, "{}", header.join(","))?;
    for v in hull.vertices() {
        let row: Vec<String> = v.iter().map(|x| format_number(*x)).collect();
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_hull(path: &Path) -> Result<ConvexPolytope> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: String| CliError::Input(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty hull file".into()))?;
    let dim = header.split(',').count();
    let mut points = Vec::new();
    for (k, l) in lines {
        let row = l
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(k + 1, format!("not a number: {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != dim {
            return Err(bad(k + 1, format!("expected {dim} columns")));
        }
        points.push(row);
    }
    Ok(convex_hull(&points)?)
}

fn is_trajectory_index(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(text.lines().next().map(|l| l.trim().starts_with("level")).unwrap_or(false))
}

/// Verifies a dumped field or trajectory. The hull is read from `hull` when
/// given, otherwise rebuilt from the dump.
pub fn cmd_verify(input: &Path, hull: Option<&Path>, tolerance: Option<f64>, include_zero: bool) -> Result<ChpReport> {
    let tolerance = tolerance.unwrap_or(CHP_TOL);
    let given = hull.map(read_hull).transpose()?;
    if is_trajectory_index(input)? {
        let traj = read_trajectory(input)?;
        let hull = match given {
            Some(h) => h,
            None => boundary_hull_parabolic(&traj, include_zero)?,
        };
        Ok(verify_trajectory(&traj, &hull, tolerance)?)
    } else {
        let field = read_field_file(input)?.into_field()?;
        let hull = match given {
            Some(h) => h,
            None if include_zero => boundary_hull_elliptic(&field)?.with_origin()?,
            None => boundary_hull_elliptic(&field)?,
        };
        Ok(verify_field(&field, &hull, tolerance)?)
    }
}

pub fn convergence_table(study: &Study) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut push = |h: f64, error: f64| {
        let eoc = rows.last().map(|p: &ConvergenceRow| (p.error / error).ln() / (p.h_or_dt / h).ln());
        rows.push(ConvergenceRow { h_or_dt: h, error, eoc });
    };
    match study {
        Study::CounterexampleElliptic { ell, cells } => {
            let ex = EllipticCounterexample::new(*ell)?;
            for &m in cells {
                let u = solve_elliptic_counterexample(&ex, m)?;
                let mesh = u.mesh();
                let mut err: f64 = 0.0;
                for i in 0..mesh.node_count() {
                    let e = ex.exact(mesh.node(i)[0].min(*ell))?;
                    err = u.value(i).iter().zip(e).fold(err, |m, (v, e)| m.max((v - e).abs()));
                }
                push(ex.ell() / m as f64, err);
            }
        }
        Study::Heat { cells, t_final, steps } => {
            let mesh = Arc::new(interval_mesh(0.0, PI, *cells)?);
            let init = NodalField::from_fn(mesh.clone(), 1, |x| vec![x[0].sin()])?;
            for &dt in steps {
                let sc = ParabolicScenario::new(
                    ParabolicCoefficients::heat(),
                    *t_final,
                    dt,
                    init.clone(),
                    ParabolicScenario::zero_boundary(1),
                )?;
                let traj = run(&sc)?;
                let decay = (-t_final).exp();
                let err = (0..mesh.node_count())
                    .map(|i| (traj.last().value(i)[0] - decay * mesh.node(i)[0].sin()).abs())
                    .fold(0.0, f64::max);
                push(dt, err);
            }
        }
    }
    Ok(rows)
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "h_or_dt,error,eoc")?;
    for r in rows {
        let eoc = r.eoc.map(format_number).unwrap_or_default();
        writeln!(f, "{},{},{}", format_number(r.h_or_dt), format_number(r.error), eoc)?;
    }
    Ok(())
}
