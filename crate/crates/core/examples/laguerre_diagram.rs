// Laguerre diagram of a small point set: cells, edges and the nonempty-cell
// test.

use moment_measure::geometry::{build_diagram, in_u};
use moment_measure::{Result, Vec2};

/// Returns `(in U, bounded cells, unbounded cells)`.
pub fn run_example() -> Result<(bool, usize, usize)> {
    let points = vec![
        Vec2::new(1.0, 1.0),
        Vec2::new(-1.0, 1.0),
        Vec2::new(-1.0, -1.0),
        Vec2::new(1.0, -1.0),
        Vec2::new(0.0, 0.0),
    ];
    // |y|^2 / 2 gives the Voronoi diagram; lowering the center enlarges its cell
    let phi: Vec<f64> = points.iter().map(|y| 0.5 * y.norm_squared()).collect();
    let phi: Vec<f64> = phi.iter().enumerate().map(|(i, p)| if i == 4 { p - 0.5 } else { *p }).collect();
    let diagram = build_diagram(&points, &phi)?;
    for cell in &diagram.cells {
        println!(
            "cell {} ({:?}): {} vertices, bounded = {}, area = {:.4}",
            cell.owner,
            points[cell.owner],
            cell.vertices.len(),
            cell.is_bounded(),
            cell.area()
        );
    }
    println!("{} edges, {} vertices", diagram.edges.len(), diagram.vertices.len());
    let inside = in_u(&points, &phi)?;
    println!("all cells nonempty: {inside}");

    let mut flat = phi.clone();
    flat[4] = 1.0;
    println!("raising the center to 1: all cells nonempty = {}", in_u(&points, &flat)?);

    let bounded = diagram.cells.iter().filter(|c| c.is_bounded()).count();
    Ok((inside, bounded, diagram.cells.len() - bounded))
}

fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
