// Damped Newton solve of a test case, printing the residual history.

use moment_measure::measure::build_test_case;
use moment_measure::solver::{solve, SolveTrace, SolverConfig};
use moment_measure::Result;

pub fn run_example(test: u32, n: usize) -> Result<SolveTrace> {
    let nu = build_test_case(test, n)?;
    let (potential, trace) = solve(&nu, &SolverConfig::default())?;
    println!("test {test}, n = {n}, N = {}", nu.len());
    for it in &trace.iterations {
        let tau = it.tau.map_or("-".to_string(), |t| format!("{t}"));
        println!(
            "k = {:2}  residual = {:.3e}  tau = {:>8}  cg = {}",
            it.k, it.residual, tau, it.linear_iterations
        );
    }
    println!("normalization c = {:.12}, psi(0) = {:.12}", potential.normalization, potential.evaluate(Default::default()));
    Ok(trace)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let test = args.next().map_or(Ok(5), |s| s.parse()).unwrap_or(5);
    let n = args.next().map_or(Ok(16), |s| s.parse()).unwrap_or(16);
    run_example(test, n)?;
    Ok(())
}
