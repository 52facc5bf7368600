//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits with status 0 so the regular test run stays usable while a
//! criterion is out of reach; set `ACCEPTANCE_STRICT=1` to turn any FAIL into
//! a nonzero exit status.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use moment_measure::analysis::{align, error_norms, fit_rate, ErrorReport};
use moment_measure::energy::{evaluate, hessian, EnergyReport};
use moment_measure::geometry::{build_diagram, in_u, Cell};
use moment_measure::measure::{build_test_case, DiscreteMeasure, ExactSolution};
use moment_measure::quadrature::exp_mass_cell;
use moment_measure::solver::{solve, Potential, SolveTrace, SolverConfig};
use moment_measure::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWEEP: [usize; 5] = [8, 16, 32, 64, 128];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random centered measure with `N` in `[6, 30]` and `Phi` in U.
fn instance(rng: &mut ChaCha8Rng) -> (DiscreteMeasure, Vec<f64>) {
    loop {
        let n = rng.gen_range(6..=30);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let pts: Vec<Vec2> =
            (0..n).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mean = pts.iter().zip(&weights).fold(Vec2::ZERO, |m, (p, w)| m + *p * *w);
        let pts: Vec<Vec2> = pts.into_iter().map(|p| p - mean).collect();
        let Ok(nu) = DiscreteMeasure::new(pts, weights) else { continue };
        let phi: Vec<f64> =
            nu.points().iter().map(|y| 0.5 * y.norm_squared() + rng.gen_range(-0.05..0.05)).collect();
        if in_u(nu.points(), &phi).unwrap() {
            return (nu, phi);
        }
    }
}

fn report_at(nu: &DiscreteMeasure, phi: &[f64]) -> EnergyReport {
    evaluate(nu, phi, &build_diagram(nu.points(), phi).unwrap()).unwrap()
}

fn dense_hessian(nu: &DiscreteMeasure, phi: &[f64]) -> Vec<Vec<f64>> {
    let d = build_diagram(nu.points(), phi).unwrap();
    let r = evaluate(nu, phi, &d).unwrap();
    hessian(nu, phi, &d, &r).unwrap().to_dense()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut grad_err, mut hess_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (nu, phi) = instance(&mut rng);
        let r = report_at(&nu, &phi);
        let h = dense_hessian(&nu, &phi);
        for i in 0..nu.len() {
            let mut p = phi.clone();
            p[i] += 1e-6;
            let up = report_at(&nu, &p).energy;
            p[i] -= 2e-6;
            let down = report_at(&nu, &p).energy;
            grad_err = grad_err.max(((up - down) / 2e-6 - r.gradient[i]).abs());

            let mut p = phi.clone();
            p[i] += 1e-5;
            let gu = report_at(&nu, &p).gradient;
            p[i] -= 2e-5;
            let gd = report_at(&nu, &p).gradient;
            for j in 0..nu.len() {
                hess_err = hess_err.max(((gu[j] - gd[j]) / 2e-5 - h[j][i]).abs());
            }
        }
    }
    outcome(
        grad_err <= 1e-5 && hess_err <= 1e-4,
        format!("20 instances, gradient error {grad_err:.2e} (<= 1e-5), Hessian error {hess_err:.2e} (<= 1e-4)"),
    )
}

fn polygon(vertices: &[(f64, f64)]) -> Cell {
    Cell {
        owner: 0,
        vertices: vertices.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
        ray_in: None,
        ray_out: None,
        neighbors: vec![0; vertices.len()],
    }
}

/// `box_area * mean(f)` over uniform samples, with its standard error.
fn monte_carlo(
    nu: &DiscreteMeasure,
    phi: &[f64],
    owner: usize,
    lo: Vec2,
    hi: Vec2,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let y = nu.points()[owner];
    for _ in 0..samples {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        // membership by the defining argmax, independent of the cell polygon
        let own = x.dot(y) - phi[owner];
        let inside = nu
            .points()
            .iter()
            .zip(phi)
            .enumerate()
            .all(|(j, (yj, pj))| j == owner || x.dot(*yj) - pj < own);
        if inside {
            let f = (phi[owner] - x.dot(y)).exp();
            s1 += f;
            s2 += f * f;
        }
    }
    let n = samples as f64;
    let area = (hi.x - lo.x) * (hi.y - lo.y);
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (area * mean, area * (var / n).sqrt())
}

/// Bounding box of the part of `cell` where the integrand exceeds 1e-16
/// times its largest value.
fn truncation_box(cell: &Cell, y: Vec2, phi_i: f64) -> (Vec2, Vec2) {
    let exponent = |x: Vec2| phi_i - x.dot(y);
    let top = cell.vertices.iter().map(|v| exponent(*v)).fold(f64::NEG_INFINITY, f64::max);
    let floor = top - 1e16f64.ln();
    let mut pts = cell.vertices.clone();
    for (origin, d) in [(cell.vertices.first(), cell.ray_in), (cell.vertices.last(), cell.ray_out)] {
        if let (Some(o), Some(d)) = (origin, d) {
            let t = (exponent(*o) - floor) / d.dot(y);
            pts.push(*o + d * t.max(0.0));
        }
    }
    let lo = pts.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
    let hi = pts
        .iter()
        .fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
    (lo, hi)
}

fn criterion_2() -> Outcome {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let square = exp_mass_cell(&polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]), Vec2::ZERO, 0.0)
        .unwrap()
        .value();
    let triangle = exp_mass_cell(&polygon(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]), Vec2::new(1.0, 0.0), 0.0)
        .unwrap()
        .value();
    let quadrant = Cell {
        owner: 0,
        vertices: vec![Vec2::ZERO],
        ray_in: Some(Vec2::new(0.0, 1.0)),
        ray_out: Some(Vec2::new(1.0, 0.0)),
        neighbors: vec![1, 2],
    };
    let quadrant = exp_mass_cell(&quadrant, Vec2::new(1.0, 1.0), 0.0).unwrap().value();
    let hand = rel(square, 1.0).max(rel(triangle, (-1.0f64).exp())).max(rel(quadrant, 1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mc_rng = ChaCha8Rng::seed_from_u64(203);
    let (mut checked, mut failed, mut unbounded, mut worst) = (0, 0, 0, 0.0f64);
    while checked < 50 {
        let (nu, phi) = instance(&mut rng);
        let d = build_diagram(nu.points(), &phi).unwrap();
        for cell in d.cells.iter().take(5) {
            if checked == 50 {
                break;
            }
            let y = nu.points()[cell.owner];
            let exact = exp_mass_cell(cell, y, phi[cell.owner]).unwrap().value();
            let (lo, hi) = truncation_box(cell, y, phi[cell.owner]);
            let (est, se) = monte_carlo(&nu, &phi, cell.owner, lo, hi, 10_000_000, &mut mc_rng);
            let z = (est - exact).abs() / se;
            worst = worst.max(z);
            if z > 3.0 {
                failed += 1;
            }
            unbounded += !cell.is_bounded() as usize;
            checked += 1;
        }
    }
    outcome(
        hand <= 1e-12 && failed == 0,
        format!(
            "hand cases max rel error {hand:.1e} (<= 1e-12); Monte Carlo 1e7 samples on {checked} cells ({unbounded} unbounded), largest deviation {worst:.2} SE, {failed} beyond 3 SE"
        ),
    )
}

fn spectral_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y: Vec<f64> = a.iter().map(|row| row.iter().zip(&x).map(|(r, v)| r * v).sum()).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / norm).collect();
    }
    lambda
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut energy_err, mut kernel_err, mut sum_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let (nu, phi) = instance(&mut rng);
        let a = rng.gen_range(-5.0..5.0);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = Vec2::new(t.cos(), t.sin());
        let s = rng.gen_range(-2.0..2.0);
        let shifted: Vec<f64> = phi.iter().zip(nu.points()).map(|(p, y)| p + a + s * v.dot(*y)).collect();
        let (r0, r1) = (report_at(&nu, &phi), report_at(&nu, &shifted));
        energy_err = energy_err.max(((r1.energy - r0.energy) / r0.energy).abs());
        sum_err = sum_err.max(r0.gradient.iter().sum::<f64>().abs()).max(r1.gradient.iter().sum::<f64>().abs());

        let h = dense_hessian(&nu, &phi);
        let norm = spectral_norm(&h);
        let ones = vec![1.0; nu.len()];
        let lin: Vec<f64> = nu.points().iter().map(|y| v.dot(*y)).collect();
        for x in [ones, lin] {
            for row in &h {
                let hx: f64 = row.iter().zip(&x).map(|(r, v)| r * v).sum();
                kernel_err = kernel_err.max(hx.abs() / norm);
            }
        }
    }
    outcome(
        energy_err <= 1e-10 && kernel_err <= 1e-8 && sum_err <= 1e-12,
        format!(
            "20 instances, energy shift rel error {energy_err:.1e} (<= 1e-10), |H k|/|H| {kernel_err:.1e} (<= 1e-8), |sum grad| {sum_err:.1e} (<= 1e-12)"
        ),
    )
}

struct Run {
    test: u32,
    n: usize,
    nu: DiscreteMeasure,
    potential: Potential,
    trace: SolveTrace,
    seconds: f64,
}

fn criterion_4(runs: &[Run]) -> Outcome {
    let mut problems = Vec::new();
    let mut slowest = 0.0f64;
    for r in runs {
        let steps = r.trace.newton_steps();
        let limit = if r.test == 5 { 40 } else { 20 };
        if r.trace.final_residual() > 1e-10 {
            problems.push(format!("test {} n {}: residual {:.1e}", r.test, r.n, r.trace.final_residual()));
        }
        if steps > limit {
            problems.push(format!("test {} n {}: {steps} iterations", r.test, r.n));
        }
        if r.test != 5 {
            if let Some(k) = r.trace.damped_iterations().into_iter().find(|&k| k >= 5) {
                problems.push(format!("test {} n {}: damped at k = {k}", r.test, r.n));
            }
        }
        if r.n == 128 {
            slowest = slowest.max(r.seconds);
        }
    }
    if slowest >= 300.0 {
        problems.push(format!("n = 128 took {slowest:.0} s"));
    }
    let iters: Vec<String> = (1..=5)
        .map(|t| {
            let ks: Vec<String> =
                runs.iter().filter(|r| r.test == t).map(|r| r.trace.newton_steps().to_string()).collect();
            format!("test {t}: {}", ks.join("/"))
        })
        .collect();
    outcome(
        problems.is_empty(),
        format!(
            "iterations for n = 8..128 [{}]; slowest n = 128 solve {slowest:.1} s{}",
            iters.join(", "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_5(runs: &[Run]) -> Outcome {
    let (mut residual, mut mass_err) = (0.0f64, 0.0f64);
    for r in runs {
        let phi = r.potential.phi();
        // the cell masses are recomputed here, independently of the solver
        let d = build_diagram(r.nu.points(), phi).unwrap();
        let masses: Vec<f64> = d
            .cells
            .iter()
            .map(|c| exp_mass_cell(c, r.nu.points()[c.owner], phi[c.owner]).unwrap().value())
            .collect();
        let total: f64 = masses.iter().sum();
        let diff: f64 = masses
            .iter()
            .zip(r.nu.weights())
            .map(|(m, w)| (m / total - w).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(diff / r.nu.weight_norm());
        let integral = total * (-r.potential.normalization).exp();
        mass_err = mass_err.max((integral - 1.0).abs());
    }
    outcome(
        residual <= 1e-10 && mass_err <= 1e-12,
        format!(
            "{} potentials, max |m/T - nu|/|nu| {residual:.1e} (<= 1e-10), max |int exp(-psi) - 1| {mass_err:.1e} (<= 1e-12)",
            runs.len()
        ),
    )
}

fn slopes(runs: &[Run], test: u32) -> [f64; 3] {
    let exact = moment_measure::measure::exact_solution(test).unwrap();
    let errors: Vec<(usize, ErrorReport)> = runs
        .iter()
        .filter(|r| r.test == test)
        .map(|r| {
            let (al, _) = align(&exact, &r.nu, &r.potential).unwrap();
            (r.nu.len(), error_norms(&exact, &r.nu, &r.potential, &al).unwrap())
        })
        .collect();
    let fit = |f: fn(&ErrorReport) -> f64| fit_rate(&errors.iter().map(|(n, e)| (*n, f(e))).collect::<Vec<_>>()).unwrap();
    [fit(|e| e.l_inf), fit(|e| e.l2_nu), fit(|e| e.l1_nu)]
}

fn criterion_6(runs: &[Run]) -> Outcome {
    let s: Vec<[f64; 3]> = (1..=5).map(|t| slopes(runs, t)).collect();
    let mut problems = Vec::new();
    let names = ["Linf", "L2", "L1"];
    for t in [0, 1] {
        for c in 0..3 {
            if !(-0.65..=-0.35).contains(&s[t][c]) {
                problems.push(format!("test {} {} slope {:.3} outside [-0.65, -0.35]", t + 1, names[c], s[t][c]));
            }
        }
    }
    for c in 0..3 {
        if !(-1.2..=-0.8).contains(&s[4][c]) {
            problems.push(format!("test 5 {} slope {:.3} outside [-1.2, -0.8]", names[c], s[4][c]));
        }
    }
    for (lumped, plain) in [(2, 0), (3, 1)] {
        for c in [1, 2] {
            if s[plain][c] - s[lumped][c] < 0.15 {
                problems.push(format!(
                    "test {} {} slope {:.3} not 0.15 steeper than test {} ({:.3})",
                    lumped + 1,
                    names[c],
                    s[lumped][c],
                    plain + 1,
                    s[plain][c]
                ));
            }
        }
        if (s[lumped][0] - s[plain][0]).abs() > 0.1 {
            problems.push(format!(
                "test {} Linf slope {:.3} differs from test {} ({:.3}) by more than 0.1",
                lumped + 1,
                s[lumped][0],
                plain + 1,
                s[plain][0]
            ));
        }
    }
    let table: Vec<String> = s
        .iter()
        .enumerate()
        .map(|(t, v)| format!("test {}: {:.3}/{:.3}/{:.3}", t + 1, v[0], v[1], v[2]))
        .collect();
    outcome(
        problems.is_empty(),
        format!(
            "slopes Linf/L2/L1 [{}]{}",
            table.join(", "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let exact = ExactSolution::Square;
    let rule = gauss_legendre(8);
    let panels = 160;
    let width = 80.0 / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = -40.0 + (p as f64 + 0.5) * width;
            rule.iter().map(move |(x, w)| (mid + 0.5 * width * x, 0.5 * width * w))
        })
        .collect();
    let mut integral = 0.0;
    for (x1, w1) in &nodes {
        for (x2, w2) in &nodes {
            integral += w1 * w2 * (-exact.psi(Vec2::new(*x1, *x2))).exp();
        }
    }
    let integral_err = (integral - 1.0).abs();

    let m = 1000;
    let grid: Vec<(Vec2, f64)> = (0..=m)
        .flat_map(|i| (0..=m).map(move |j| (i, j)))
        .map(|(i, j)| {
            let y = Vec2::new(-1.0 + 2.0 * i as f64 / m as f64, -1.0 + 2.0 * j as f64 / m as f64);
            (y, exact.phi(y))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut duality_err = 0.0f64;
    for _ in 0..100 {
        let x = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let sup = grid.iter().map(|(y, p)| x.dot(*y) - p).fold(f64::NEG_INFINITY, f64::max);
        duality_err = duality_err.max((sup - exact.psi(x)).abs());
    }
    outcome(
        integral_err <= 1e-6 && duality_err <= 1e-3,
        format!(
            "|int exp(-psi) - 1| {integral_err:.1e} (<= 1e-6); max Legendre duality gap at 100 points {duality_err:.1e} (<= 1e-3)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = Command::new(env!("CARGO_BIN_EXE_moment-measure"))
            .args(["sweep", "--test", "1", "--n-list", "8,16", "--out"])
            .arg(d.path())
            .output()
            .unwrap();
        if !out.status.success() {
            return outcome(false, format!("sweep failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    let mut problems = Vec::new();
    for (name, header, columns, rows) in
        [("test1.txt", "N Linfty L2 L1", 4, 2..=2), ("test1-n8.txt", "k residual damping", 3, 1..=19)]
    {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        if a != b {
            problems.push(format!("{name} differs between runs"));
        }
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&header) {
            problems.push(format!("{name}: bad header"));
        }
        if !rows.contains(&(lines.len() - 1)) {
            problems.push(format!("{name}: {} data rows", lines.len() - 1));
        }
        if !text.ends_with('\n') || text.contains("  ") || text.lines().any(|l| l.ends_with(' ')) {
            problems.push(format!("{name}: whitespace"));
        }
        if lines[1..].iter().any(|l| l.split(' ').count() != columns) {
            problems.push(format!("{name}: column count"));
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            "test1.txt and test1-n8.txt byte-identical across two runs, schemas match".into()
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        println!("{} criterion {id} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    report(1, "derivative correctness", criterion_1());
    report(2, "quadrature oracle", criterion_2());
    report(3, "invariance", criterion_3());

    let config = SolverConfig::default();
    let mut runs = Vec::new();
    for test in 1..=5 {
        for n in SWEEP {
            let nu = build_test_case(test, n).unwrap();
            let t = Instant::now();
            match solve(&nu, &config) {
                Ok((potential, trace)) => {
                    runs.push(Run { test, n, nu, potential, trace, seconds: t.elapsed().as_secs_f64() })
                }
                Err(e) => println!("solve failed for test {test} n {n}: {e}"),
            }
        }
    }
    let all_solved = runs.len() == 5 * SWEEP.len();
    let c4 = criterion_4(&runs);
    report(4, "solver convergence", outcome(c4.pass && all_solved, c4.detail));
    report(5, "moment-measure fidelity", criterion_5(&runs));
    if all_solved {
        report(6, "convergence rates", criterion_6(&runs));
    } else {
        report(6, "convergence rates", outcome(false, "missing runs".into()));
    }
    report(7, "exact-solution self-consistency", criterion_7());
    report(8, "output format", criterion_8());

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("{passed}/{} criteria passed in {:.0} s", results.len(), start.elapsed().as_secs_f64());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < results.len() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
