// Alignment against the exact solution, error norms, and a log-log rate fit
// over a short resolution sweep.

use moment_measure::analysis::{align, error_norms, fit_rate, ErrorReport};
use moment_measure::measure::{build_test_case, exact_solution};
use moment_measure::solver::{solve, SolverConfig};
use moment_measure::Result;

/// Returns the fitted `(Linf, L2, L1)` slopes.
pub fn run_example(test: u32, ns: &[usize]) -> Result<[f64; 3]> {
    let exact = exact_solution(test)?;
    let mut rows: Vec<(usize, ErrorReport)> = Vec::new();
    for &n in ns {
        let nu = build_test_case(test, n)?;
        let (potential, _) = solve(&nu, &SolverConfig::default())?;
        let (alignment, _) = align(&exact, &nu, &potential)?;
        let e = error_norms(&exact, &nu, &potential, &alignment)?;
        println!(
            "N = {:5}  Linf = {:.4e}  L2 = {:.4e}  L1 = {:.4e}  (a = {:.2e}, v = ({:.1e}, {:.1e}))",
            nu.len(),
            e.l_inf,
            e.l2_nu,
            e.l1_nu,
            alignment.a,
            alignment.v.x,
            alignment.v.y
        );
        rows.push((nu.len(), e));
    }
    let slope = |f: fn(&ErrorReport) -> f64| fit_rate(&rows.iter().map(|(n, e)| (*n, f(e))).collect::<Vec<_>>());
    let slopes = [slope(|e| e.l_inf)?, slope(|e| e.l2_nu)?, slope(|e| e.l1_nu)?];
    println!("slopes: Linf {:.3}  L2 {:.3}  L1 {:.3}", slopes[0], slopes[1], slopes[2]);
    Ok(slopes)
}

fn main() -> Result<()> {
    run_example(3, &[8, 16, 32])?;
    Ok(())
}
