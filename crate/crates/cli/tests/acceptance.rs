//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chp::discretization::{interval_mesh, rect_mesh, Mesh, NodalField};
use chp::elliptic::{assemble, solve_dirichlet, solve_scalar_mp, DirichletData, EllipticCoefficients, MatrixField};
use chp::geometry::{convex_hull, metric_project, ConvexPolytope, MetricMatrix};
use chp::oracles::{EllipticCounterexample, ParabolicCounterexample};
use chp::parabolic::{
    advection_preset, counterexample_scenario, p_laplace_preset, reaction_preset, run, ParabolicCoefficients,
    ParabolicScenario, DEFAULT_EPSILON,
};
use chp::verifier::{
    boundary_hull_elliptic, boundary_hull_parabolic, nonlinear_tolerance, verify_field, verify_trajectory, Verdict,
    CHP_TOL,
};
use chp_cli::commands::{run_scenario, solve_elliptic_counterexample};
use chp_cli::scenario::ScenarioConfig;
use chp_cli::RunOptions;
use chp::nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn criterion(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let ok = out.ok && elapsed <= limit;
    println!(
        "criterion {n} ({name}): {} | {} | {:.2}s of {}s",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.1;
    MetricMatrix::new((&a + a.transpose()) * 0.5).unwrap()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, count: usize, r: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-r..r)).collect()).collect()
}

/// Smallest `A`-distance from `x` to a grid of step `1/steps` over the
/// weight simplex of three points.
fn grid_distance(x: &[f64], tri: [&[f64]; 3], metric: &MetricMatrix, steps: usize) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    let mut p = vec![0.0; n];
    for i in 0..=steps {
        for j in 0..=steps - i {
            let (w0, w1) = (i as f64 / steps as f64, j as f64 / steps as f64);
            let w2 = 1.0 - w0 - w1;
            for k in 0..n {
                p[k] = w0 * tri[0][k] + w1 * tri[1][k] + w2 * tri[2][k] - x[k];
            }
            best = best.min(metric.inner(&p, &p));
        }
    }
    best.sqrt()
}

fn brute_force_distance(x: &[f64], hull: &ConvexPolytope, metric: &MetricMatrix) -> f64 {
    let v: Vec<&[f64]> = hull.vertices().collect();
    match v.len() {
        1 => grid_distance(x, [v[0], v[0], v[0]], metric, 1),
        2 => grid_distance(x, [v[0], v[1], v[1]], metric, 1000),
        // hull vertices in 2D come in counterclockwise order, so a fan
        // from the first vertex covers the polygon
        _ => (1..v.len() - 1)
            .map(|k| grid_distance(x, [v[0], v[k], v[k + 1]], metric, 1000))
            .fold(f64::INFINITY, f64::min),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..10_000 {
        let n = [1, 2, 3, 5][case % 4];
        let metric = random_metric(&mut rng, n);
        let count = rng.gen_range(1..=8);
        let hull = convex_hull(&random_points(&mut rng, n, count, 2.0)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let px = metric_project(&x, &hull, &metric).unwrap();
        let py = metric_project(&y, &hull, &metric).unwrap();
        let r = sub(&x, &px.point);
        for v in hull.vertices() {
            worst = worst.max(metric.inner(&r, &sub(v, &px.point)));
        }
        let dp = sub(&px.point, &py.point);
        let dx = sub(&x, &y);
        worst = worst.max(-metric.inner(&dp, &dx));
        worst = worst.max(metric.norm(&dp) - metric.norm(&dx));
        let again = metric_project(&px.point, &hull, &metric).unwrap();
        worst = worst.max(metric.norm(&sub(&again.point, &px.point)));
    }
    let mut oracle_gap: f64 = 0.0;
    for case in 0..200 {
        let (n, count) = [(1, 3), (2, 4), (3, 3), (5, 3)][case % 4];
        let metric = random_metric(&mut rng, n);
        let hull = convex_hull(&random_points(&mut rng, n, count, 1.0)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let d = metric_project(&x, &hull, &metric).unwrap().distance;
        oracle_gap = oracle_gap.max((d - brute_force_distance(&x, &hull, &metric)).abs());
    }
    Outcome {
        ok: worst <= 1e-9 && oracle_gap <= 2e-3,
        detail: format!("worst axiom defect {worst:.2e} (tol 1e-9), brute-force gap {oracle_gap:.2e} (tol 2e-3)"),
    }
}

fn criterion_2() -> Outcome {
    let ex = EllipticCounterexample::new(0.9).unwrap();
    let errors: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&m| {
            let u = solve_elliptic_counterexample(&ex, m).unwrap();
            let mesh = u.mesh();
            (0..mesh.node_count())
                .flat_map(|i| {
                    let e = ex.exact(mesh.node(i)[0].min(0.9)).unwrap();
                    [(u.value(i)[0] - e[0]).abs(), (u.value(i)[1] - e[1]).abs()]
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let eocs: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let u = solve_elliptic_counterexample(&ex, 512).unwrap();
    let report = verify_field(&u, &boundary_hull_elliptic(&u).unwrap(), CHP_TOL).unwrap();
    // closed-form projection onto the segment from u(0) = 0 to u(ell)
    let q = ex.exact(0.9).unwrap();
    let oracle = (0..=100_000)
        .map(|k| {
            let p = ex.exact(0.9 * k as f64 / 100_000.0).unwrap();
            let t = ((p[0] * q[0] + p[1] * q[1]) / (q[0] * q[0] + q[1] * q[1])).clamp(0.0, 1.0);
            ((p[0] - t * q[0]).powi(2) + (p[1] - t * q[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    let ok = errors[3] <= 5e-4
        && eocs.iter().all(|e| (1.8..=2.2).contains(e))
        && report.verdict == Verdict::Fail
        && (report.max_violation - oracle).abs() <= 0.1 * oracle;
    Outcome {
        ok,
        detail: format!(
            "error(512) {:.2e}, eoc {:?}, violation {:.4} vs oracle {oracle:.4}, verdict {}",
            errors[3],
            eocs.iter().map(|e| (e * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            report.max_violation,
            report.verdict
        ),
    }
}

fn criterion_3() -> Outcome {
    let ex = ParabolicCounterexample::new(1.0, 2.0).unwrap();
    let sc = counterexample_scenario(&ex, 256, 1e-3, 1.0).unwrap();
    let traj = run(&sc).unwrap();
    let mut err: f64 = 0.0;
    for (t, f) in traj.times().iter().zip(traj.fields()) {
        for i in 0..sc.mesh.node_count() {
            let e = ex.exact(*t, sc.mesh.node(i)[0].min(std::f64::consts::PI)).unwrap();
            err = err.max((f.value(i)[0] - e[0]).abs()).max((f.value(i)[1] - e[1]).abs());
        }
    }
    let hull = boundary_hull_parabolic(&traj, false).unwrap();
    let mut ends = hull.to_vec();
    ends.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let hull_ok = ends.len() == 2
        && ends[0].iter().all(|v| v.abs() <= 1e-6)
        && ends[1].iter().all(|v| (v - 1.0).abs() <= 1e-6);
    let report = verify_trajectory(&traj, &hull, CHP_TOL).unwrap();
    let target = ((-1.0_f64).exp() - (-2.0_f64).exp()) / 2f64.sqrt();
    let ok = err <= 5e-3
        && hull_ok
        && report.verdict == Verdict::Fail
        && (report.max_violation - target).abs() <= 0.1 * target;
    Outcome {
        ok,
        detail: format!(
            "nodal error {err:.2e}, hull {ends:?}, violation {:.4} at t = {:.3} vs {target:.4}, verdict {}",
            report.max_violation,
            report.argmax_time.unwrap(),
            report.verdict
        ),
    }
}

/// Constant SPD coupling with condition number at most 50.
fn random_coupling(rng: &mut ChaCha8Rng, n: usize) -> MetricMatrix {
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    let eig: Vec<f64> = (0..n).map(|_| 50f64.powf(rng.gen_range(0.0..1.0))).collect();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, eig.iter().map(|e| e / lo)));
    let m = &q * d * q.transpose();
    MetricMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// Uniformly SPD `a(x)` with eigenvalues in `[0.5, 1.5 * anisotropy]`.
fn random_diffusion(rng: &mut ChaCha8Rng, anisotropy: f64) -> (MatrixField, f64) {
    let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.5..6.0));
    let ph: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..6.3));
    let field: MatrixField = Arc::new(move |x: &[f64]| {
        let arg = |k: usize| w[k] * x[0] + ph[k] + if x.len() == 2 { 0.7 * w[k] * x[1] } else { 0.0 };
        let s = |k: usize| arg(k).sin();
        if x.len() == 1 {
            return DMatrix::from_element(1, 1, 1.0 + 0.5 * s(0));
        }
        let theta = 3.0 * s(0);
        let d1 = 1.0 + 0.5 * s(1);
        let d2 = d1 * (1.0 + (anisotropy - 1.0) * 0.5 * (1.0 + s(2)));
        let (c, sn) = (theta.cos(), theta.sin());
        let r = DMatrix::from_row_slice(2, 2, &[c, -sn, sn, c]);
        let a = &r * DMatrix::from_row_slice(2, 2, &[d1, 0.0, 0.0, d2]) * r.transpose();
        (&a + a.transpose()) * 0.5
    });
    (field, 0.5 * (1.0 - 1e-9))
}

/// Random trigonometric curve along the boundary.
fn random_boundary(rng: &mut ChaCha8Rng, mesh: &Mesh, n: usize) -> DirichletData {
    let c: Vec<[f64; 7]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    DirichletData::from_fn(mesh, n, |x| {
        let th = if x.len() == 2 { (x[1] - 0.5).atan2(x[0] - 0.5) } else { 10.0 * x[0] };
        c.iter()
            .map(|c| c[0] + (1..=3).map(|k| c[2 * k - 1] * (k as f64 * th).cos() + c[2 * k] * (k as f64 * th).sin()).sum::<f64>())
            .collect()
    })
    .unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let line = Arc::new(interval_mesh(0.0, 1.0, 256).unwrap());
    let square = Arc::new(rect_mesh((0.0, 1.0), (0.0, 1.0), 32, 32).unwrap());
    let h = 1.0 / 32.0;
    let (mut worst_1d, mut worst_2d, mut excess_2d) = (0.0_f64, 0.0_f64, 0usize);
    let mut all_ok = true;
    for k in 0..50 {
        let n = 2 + k % 2;
        for mesh in [&line, &square] {
            let coupling = random_coupling(&mut rng, n);
            let (a, lambda) = random_diffusion(&mut rng, 5.0);
            let coeffs = EllipticCoefficients::new(coupling, a, lambda).unwrap();
            let bc = random_boundary(&mut rng, mesh, n);
            let u = solve_dirichlet(&assemble(mesh, &coeffs).unwrap(), &bc).unwrap();
            let r = verify_field(&u, &boundary_hull_elliptic(&u).unwrap(), CHP_TOL).unwrap();
            if mesh.dim() == 1 {
                worst_1d = worst_1d.max(r.max_violation);
                all_ok &= r.passed();
            } else {
                worst_2d = worst_2d.max(r.max_violation);
                if r.max_violation > CHP_TOL {
                    excess_2d += 1;
                    println!("  2D scenario {k}: violation {:.3e} above {CHP_TOL:e}", r.max_violation);
                }
                all_ok &= r.max_violation <= CHP_TOL.max(0.5 * h * h * u.max_abs());
            }
        }
    }
    Outcome {
        ok: all_ok,
        detail: format!(
            "50 scenarios per dimension, worst 1D {worst_1d:.2e}, worst 2D {worst_2d:.2e}, 2D above 1e-7: {excess_2d}"
        ),
    }
}

fn curve(x: &[f64]) -> Vec<f64> {
    let s = x.iter().sum::<f64>();
    vec![(3.0 * s).cos() * (1.0 + s), (4.0 * s).sin() + 0.5 * s * s]
}

fn criterion_5() -> Outcome {
    let line = || Arc::new(interval_mesh(0.0, 1.0, 128).unwrap());
    let square = || Arc::new(rect_mesh((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap());
    let cases: Vec<(&str, Arc<Mesh>, ParabolicCoefficients, bool, f64, f64)> = vec![
        ("p=1.5 1D", line(), p_laplace_preset(1.5, DEFAULT_EPSILON).unwrap(), false, 1e-4, 0.02),
        ("p=1.5 2D", square(), p_laplace_preset(1.5, DEFAULT_EPSILON).unwrap(), false, 1e-3, 0.05),
        ("p=3 1D", line(), p_laplace_preset(3.0, DEFAULT_EPSILON).unwrap(), false, 1e-5, 0.01),
        ("p=3 2D", square(), p_laplace_preset(3.0, DEFAULT_EPSILON).unwrap(), false, 1e-3, 0.05),
        ("advection", line(), advection_preset(0.5, vec![1.0]).unwrap(), false, 1e-3, 0.05),
        ("reaction c=1", line(), reaction_preset(1.0).unwrap(), true, 1e-3, 0.05),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, mesh, coeffs, include_zero, dt, t_final) in cases {
        let init = NodalField::from_fn(mesh, 2, curve).unwrap();
        let bc = ParabolicScenario::frozen_boundary(&init);
        let sc = ParabolicScenario::new(coeffs, t_final, dt, init.clone(), bc).unwrap();
        match run(&sc) {
            Ok(traj) => {
                let hull = boundary_hull_parabolic(&traj, include_zero).unwrap();
                let r = verify_trajectory(&traj, &hull, nonlinear_tolerance(&init)).unwrap();
                let eta = r.eta_series.iter().map(|e| e.1).fold(0.0, f64::max);
                let bound = 1e-10 * init.mass_norm_sq();
                ok &= r.passed() && eta <= bound;
                parts.push(format!("{name}: {:.1e}/{:.1e}", r.max_violation, eta));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    Outcome { ok, detail: format!("violation/eta {}", parts.join(", ")) }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let cells = rng.gen_range(8..=256);
        let mesh = Arc::new(interval_mesh(0.0, rng.gen_range(0.5..3.0), cells).unwrap());
        let (a, lambda) = random_diffusion(&mut rng, 1.0);
        let (g0, g1) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let bc = DirichletData::new(&mesh, 1, vec![g0, g1]).unwrap();
        let u = solve_scalar_mp(&mesh, a, lambda, &bc).unwrap();
        let (m, big_m) = (f64::min(g0, g1), f64::max(g0, g1));
        for v in u.values() {
            worst = worst.max(m - v).max(v - big_m);
        }
    }
    Outcome { ok: worst <= 1e-10, detail: format!("100 scenarios, worst excess over [m, M] {worst:.2e} (tol 1e-10)") }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|e| e == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn criterion_7() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let mut names: Vec<PathBuf> = std::fs::read_dir(configs_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for config in names {
        let text = std::fs::read_to_string(&config).unwrap();
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let stem = config.file_stem().unwrap().to_string_lossy().to_string();
        let dirs = [tmp.path().join(format!("{stem}-a")), tmp.path().join(format!("{stem}-b"))];
        for d in &dirs {
            run_scenario(&cfg, d, &RunOptions::default()).unwrap();
        }
        let (a, b) = (csv_files(&dirs[0]), csv_files(&dirs[1]));
        if a.len() != b.len() || a.is_empty() {
            mismatches.push(stem.clone());
            continue;
        }
        for (fa, fb) in a.iter().zip(&b) {
            compared += 1;
            if std::fs::read(fa).unwrap() != std::fs::read(fb).unwrap() {
                mismatches.push(fa.display().to_string());
            }
        }
    }
    Outcome {
        ok: mismatches.is_empty(),
        detail: format!("{compared} CSV files compared across two runs of every config, mismatches {mismatches:?}"),
    }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "projection axioms", secs(30), criterion_1),
        criterion(2, "elliptic counterexample", secs(5), criterion_2),
        criterion(3, "parabolic counterexample", secs(20), criterion_3),
        criterion(4, "elliptic convex hull property", secs(60), criterion_4),
        criterion(5, "nonlinear parabolic convex hull property", secs(120), criterion_5),
        criterion(6, "scalar maximum principle", secs(10), criterion_6),
        criterion(7, "determinism", secs(600), criterion_7),
    ];
    assert!(results.iter().all(|ok| *ok), "acceptance criteria failed: {results:?}");
}
