// Exact integrals of `exp(-Phi*)` over Laguerre cells and edges.

use moment_measure::geometry::build_diagram;
use moment_measure::quadrature::{exp_mass_cell, exp_mass_edge};
use moment_measure::{Result, Vec2};

/// Returns the cell masses and the total mass.
pub fn run_example() -> Result<(Vec<f64>, f64)> {
    let points: Vec<Vec2> = (0..6)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / 3.0;
            Vec2::new(t.cos(), t.sin())
        })
        .chain([Vec2::ZERO])
        .collect();
    let phi = vec![0.0, 0.1, 0.0, 0.1, 0.0, 0.1, -0.2];
    let diagram = build_diagram(&points, &phi)?;
    let mut masses = Vec::new();
    for cell in &diagram.cells {
        let m = exp_mass_cell(cell, points[cell.owner], phi[cell.owner])?;
        println!("m_{} = {:.10} (log {:.6})", cell.owner, m.value(), m.ln());
        masses.push(m.value());
    }
    let total: f64 = masses.iter().sum();
    println!("T = {total:.10}");
    for e in diagram.edges.iter().take(4) {
        let m = exp_mass_edge(&e.geometry, points[e.i], phi[e.i])?;
        println!("edge ({}, {}): {:.10}", e.i, e.j, m.value());
    }
    Ok((masses, total))
}

fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
