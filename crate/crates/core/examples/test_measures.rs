// Builds the five discretized test measures and prints their sizes and
// scale constants.

use moment_measure::measure::{build_test_case, diagnostics, TestCase};
use moment_measure::Result;

/// Returns `(id, N, mean norm)` for each test case at `n`.
pub fn run_example(n: usize) -> Result<Vec<(u32, usize, f64)>> {
    let mut rows = Vec::new();
    for case in TestCase::ALL {
        let nu = build_test_case(case.id(), n)?;
        let d = diagnostics(&nu);
        println!(
            "test {} ({:?}): N = {}, |mean| = {:.1e}, R = {:.4}, r = {:.4}, min weight = {:.3e}",
            case.id(),
            case,
            nu.len(),
            nu.mean().norm(),
            d.mean_norm,
            d.directional_spread,
            nu.weights().iter().copied().fold(f64::INFINITY, f64::min),
        );
        rows.push((case.id(), nu.len(), d.mean_norm));
    }
    Ok(rows)
}

fn main() -> Result<()> {
    run_example(8)?;
    Ok(())
}
