// Solving for a user-supplied measure: random points with random masses,
// recentered, then the potential evaluated off the support.

use moment_measure::measure::DiscreteMeasure;
use moment_measure::solver::{solve, SolverConfig};
use moment_measure::{Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Returns the gradient residual reached and the number of Newton steps.
pub fn run_example(seed: u64) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 40;
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let points: Vec<Vec2> = (0..n)
        .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)))
        .collect();
    let mean = points.iter().zip(&weights).fold(Vec2::ZERO, |m, (p, w)| m + *p * *w);
    let points: Vec<Vec2> = points.into_iter().map(|p| p - mean).collect();
    let nu = DiscreteMeasure::new(points, weights)?;

    let (potential, trace) = solve(&nu, &SolverConfig::default())?;
    println!("{} Newton steps, final residual {:.2e}", trace.newton_steps(), trace.final_residual());
    for x in [Vec2::ZERO, Vec2::new(3.0, 0.0), Vec2::new(0.0, -3.0)] {
        println!("psi({:?}) = {:.8}", (x.x, x.y), potential.evaluate(x));
    }
    Ok((trace.final_residual(), trace.newton_steps()))
}

fn main() -> Result<()> {
    run_example(2024)?;
    Ok(())
}
