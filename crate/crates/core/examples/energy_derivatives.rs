// Energy, gradient and Hessian at the Voronoi initialization, with a
// finite-difference check of the gradient.

use moment_measure::energy::{evaluate, hessian};
use moment_measure::geometry::build_diagram;
use moment_measure::measure::build_test_case;
use moment_measure::solver::initial_guess;
use moment_measure::Result;

/// Returns the largest gradient error against central differences.
pub fn run_example() -> Result<f64> {
    let nu = build_test_case(2, 4)?;
    let phi = initial_guess(&nu).into_inner();
    let diagram = build_diagram(nu.points(), &phi)?;
    let report = evaluate(&nu, &phi, &diagram)?;
    let h = hessian(&nu, &phi, &diagram, &report)?;
    println!("N = {}, E = {:.12}, |grad| = {:.3e}", nu.len(), report.energy, report.gradient_norm());
    println!("Hessian: {} stored entries, |H| <= {:.4}", h.nnz(), h.norm_bound());

    let step = 1e-6;
    let energy_at = |p: &[f64]| -> Result<f64> {
        let d = build_diagram(nu.points(), p)?;
        Ok(evaluate(&nu, p, &d)?.energy)
    };
    let mut worst: f64 = 0.0;
    for i in 0..nu.len() {
        let mut p = phi.clone();
        p[i] += step;
        let up = energy_at(&p)?;
        p[i] -= 2.0 * step;
        let down = energy_at(&p)?;
        worst = worst.max(((up - down) / (2.0 * step) - report.gradient[i]).abs());
    }
    println!("max |grad - finite difference| = {worst:.2e}");
    Ok(worst)
}

fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
