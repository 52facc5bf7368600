//! Closed-form integrals of `exp(phi_i - <x, y>)` over convex polygonal
//! cells (possibly unbounded) and over their edges.
//!
//! Cell integrals use the divergence theorem with the field
//! `F(x) = -exp(phi_i - <x, y>) y / |y|^2`, whose divergence is the
//! integrand, so each boundary piece reduces to a one-dimensional exponential
//! integral. Values are returned as `scaled * exp(log_scale)` so that large
//! exponents during early Newton iterations cannot overflow.

use crate::geometry::{Cell, EdgeGeometry};
use crate::{Error, Result, Vec2};

const SERIES_SWITCH: f64 = 1e-4;

/// `integral over the cell of exp(phi_i - <x, y_i>) dx`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CellMass {
    pub scaled: f64,
    pub log_scale: f64,
}

/// `integral over the edge of exp(phi_i - <x, y_i>) ds`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EdgeMass {
    pub scaled: f64,
    pub log_scale: f64,
}

impl CellMass {
    pub fn value(&self) -> f64 {
        self.scaled * self.log_scale.exp()
    }

    /// Natural logarithm of the mass.
    pub fn ln(&self) -> f64 {
        self.scaled.ln() + self.log_scale
    }
}

impl EdgeMass {
    pub fn value(&self) -> f64 {
        self.scaled * self.log_scale.exp()
    }

    pub fn ln(&self) -> f64 {
        self.scaled.ln() + self.log_scale
    }
}

/// `integral_0^len exp(-c t) dt`, accurate to a few ulps for every `c`.
pub fn stable_exp_segment(c: f64, len: f64) -> f64 {
    if len == 0.0 {
        return 0.0;
    }
    let x = c * len;
    if x.abs() < SERIES_SWITCH {
        len * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        -(-x).exp_m1() / c
    }
}

/// A boundary piece parameterized as `origin + t * dir` for `t` in
/// `[0, len]`, with the outward normal of the cell.
struct Piece {
    origin: Vec2,
    dir: Vec2,
    len: f64,
    normal: Vec2,
}

/// `log(integral of exp(phi - <x, y>))` along a piece, split into
/// `(exponent at the start, integral of exp(-c t))`.
fn line_integral(piece: &Piece, y: Vec2, phi: f64) -> Result<(f64, f64)> {
    let a = phi - piece.origin.dot(y);
    let c = piece.dir.dot(y);
    if piece.len.is_infinite() {
        if c <= 0.0 {
            return Err(Error::DivergentEdgeIntegral);
        }
        return Ok((a, 1.0 / c));
    }
    if c < 0.0 {
        // integrate from the far end, where the exponent is largest
        let far = piece.origin + piece.dir * piece.len;
        return Ok((phi - far.dot(y), stable_exp_segment(-c, piece.len)));
    }
    Ok((a, stable_exp_segment(c, piece.len)))
}

fn pieces(cell: &Cell) -> Vec<Piece> {
    let mut out = Vec::with_capacity(cell.vertices.len() + 1);
    for (geometry, _) in cell.edges() {
        out.push(match geometry {
            EdgeGeometry::Segment { start, end } => {
                let d = end - start;
                let len = d.norm();
                let dir = if len > 0.0 { d * (1.0 / len) } else { Vec2::ZERO };
                Piece { origin: start, dir, len, normal: Vec2::new(dir.y, -dir.x) }
            }
            EdgeGeometry::Ray { origin, direction } => Piece {
                origin,
                dir: direction,
                len: f64::INFINITY,
                normal: Vec2::ZERO,
            },
        });
    }
    if let (Some(din), Some(dout)) = (cell.ray_in, cell.ray_out) {
        // The incoming ray is traversed against its direction.
        out[0].normal = Vec2::new(-din.y, din.x);
        let last = out.len() - 1;
        out[last].normal = Vec2::new(dout.y, -dout.x);
    }
    out
}

/// Mass of a Laguerre cell owned by the point `y` with weight `phi_i`.
pub fn exp_mass_cell(cell: &Cell, y: Vec2, phi_i: f64) -> Result<CellMass> {
    let y2 = y.norm_squared();
    if y2 == 0.0 {
        if !cell.is_bounded() {
            return Err(Error::DivergentIntegral);
        }
        return Ok(CellMass { scaled: cell.area(), log_scale: phi_i });
    }
    if let (Some(din), Some(dout)) = (cell.ray_in, cell.ray_out) {
        if din.dot(y) <= 0.0 || dout.dot(y) <= 0.0 {
            return Err(Error::DivergentIntegral);
        }
    }
    let shift = cell
        .vertices
        .iter()
        .map(|v| phi_i - v.dot(y))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for piece in pieces(cell) {
        let flux = piece.normal.dot(y);
        if flux == 0.0 || piece.len == 0.0 {
            continue;
        }
        let (a, s) = line_integral(&piece, y, phi_i)?;
        total -= flux / y2 * (a - shift).exp() * s;
    }
    Ok(CellMass { scaled: total, log_scale: shift })
}

/// Mass of a diagram edge, using the affine form `phi_i - <x, y>` of either
/// adjacent cell (they agree on the edge).
pub fn exp_mass_edge(edge: &EdgeGeometry, y: Vec2, phi_i: f64) -> Result<EdgeMass> {
    let piece = match *edge {
        EdgeGeometry::Segment { start, end } => {
            let d = end - start;
            let len = d.norm();
            if len == 0.0 {
                return Ok(EdgeMass { scaled: 0.0, log_scale: 0.0 });
            }
            Piece { origin: start, dir: d * (1.0 / len), len, normal: Vec2::ZERO }
        }
        EdgeGeometry::Ray { origin, direction } => {
            Piece { origin, dir: direction, len: f64::INFINITY, normal: Vec2::ZERO }
        }
    };
    let (a, s) = line_integral(&piece, y, phi_i)?;
    Ok(EdgeMass { scaled: s, log_scale: a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn polygon(vertices: &[(f64, f64)]) -> Cell {
        Cell {
            owner: 0,
            vertices: vertices.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
            ray_in: None,
            ray_out: None,
            neighbors: vec![0; vertices.len()],
        }
    }

    fn quadrant() -> Cell {
        Cell {
            owner: 0,
            vertices: vec![Vec2::ZERO],
            ray_in: Some(Vec2::new(0.0, 1.0)),
            ray_out: Some(Vec2::new(1.0, 0.0)),
            neighbors: vec![1, 2],
        }
    }

    #[test]
    fn stable_segment_examples() {
        assert_eq!(stable_exp_segment(0.0, 3.0), 3.0);
        assert_relative_eq!(stable_exp_segment(1.0, 1.0), 1.0 - 1.0 / E, max_relative = 1e-16);
        let v = stable_exp_segment(1e-14, 1.0);
        assert!(((v - (1.0 - 5e-15)) / v).abs() <= 1e-16);
        assert_eq!(stable_exp_segment(2.0, 0.0), 0.0);
        assert_relative_eq!(stable_exp_segment(-1.0, 2.0), (E * E - 1.0), max_relative = 1e-15);
    }

    #[test]
    fn stable_segment_is_continuous_at_switch() {
        for c in [0.99e-4f64, 1e-4, 1.01e-4, -0.99e-4, -1.01e-4] {
            let exact = -(-c).exp_m1() / c;
            assert_relative_eq!(stable_exp_segment(c, 1.0), exact, max_relative = 2e-16);
        }
    }

    #[test]
    fn unit_square_at_origin_is_area() {
        let m = exp_mass_cell(&polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]), Vec2::ZERO, 0.0)
            .unwrap();
        assert_eq!(m.value(), 1.0);
    }

    #[test]
    fn triangle_mass() {
        let cell = polygon(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let m = exp_mass_cell(&cell, Vec2::new(1.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(m.value(), 1.0 / E, max_relative = 1e-15);
    }

    #[test]
    fn quadrant_mass() {
        let m = exp_mass_cell(&quadrant(), Vec2::new(1.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(m.value(), 1.0, max_relative = 1e-15);
        let m = exp_mass_cell(&quadrant(), Vec2::new(2.0, 0.5), 0.3).unwrap();
        assert_relative_eq!(m.value(), 0.3f64.exp() / (2.0 * 0.5), max_relative = 1e-15);
    }

    #[test]
    fn divergent_cells_are_rejected() {
        assert!(matches!(
            exp_mass_cell(&quadrant(), Vec2::new(1.0, -1.0), 0.0),
            Err(Error::DivergentIntegral)
        ));
        assert!(matches!(exp_mass_cell(&quadrant(), Vec2::ZERO, 0.0), Err(Error::DivergentIntegral)));
        let ray = EdgeGeometry::Ray { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) };
        assert!(matches!(
            exp_mass_edge(&ray, Vec2::new(-1.0, 0.0), 0.0),
            Err(Error::DivergentEdgeIntegral)
        ));
    }

    #[test]
    fn edge_examples() {
        let seg = |a: (f64, f64), b: (f64, f64)| EdgeGeometry::Segment {
            start: Vec2::new(a.0, a.1),
            end: Vec2::new(b.0, b.1),
        };
        let y = Vec2::new(1.0, 0.0);
        assert_relative_eq!(exp_mass_edge(&seg((0.0, 0.0), (0.0, 1.0)), y, 0.0).unwrap().value(), 1.0);
        assert_relative_eq!(
            exp_mass_edge(&seg((0.0, 0.0), (1.0, 0.0)), y, 0.0).unwrap().value(),
            1.0 - 1.0 / E,
            max_relative = 1e-15
        );
        // either orientation gives the same value
        assert_relative_eq!(
            exp_mass_edge(&seg((1.0, 0.0), (0.0, 0.0)), y, 0.0).unwrap().value(),
            1.0 - 1.0 / E,
            max_relative = 1e-15
        );
        let ray = EdgeGeometry::Ray { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) };
        assert_relative_eq!(exp_mass_edge(&ray, Vec2::new(2.0, 0.0), 0.0).unwrap().value(), 0.5);
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        let cell = polygon(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let m = exp_mass_cell(&cell, Vec2::new(1.0, 0.0), 2000.0).unwrap();
        assert!(m.value().is_infinite());
        assert_relative_eq!(m.ln(), 2000.0 - 1.0, max_relative = 1e-15);
    }

    #[test]
    fn chord_split_is_additive() {
        let whole = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0), (-0.5, 1.0)]);
        let left = polygon(&[(0.0, 0.0), (1.0, 2.0), (-0.5, 1.0)]);
        let right = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0)]);
        let y = Vec2::new(0.7, -1.3);
        let m = |c: &Cell| exp_mass_cell(c, y, 0.2).unwrap().value();
        assert_relative_eq!(m(&left) + m(&right), m(&whole), max_relative = 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let v = Vec2::new(0.3, -2.0);
        let base = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0)]);
        let mut moved = base.clone();
        for p in &mut moved.vertices {
            *p = *p + v;
        }
        let y = Vec2::new(-0.4, 1.1);
        let a = exp_mass_cell(&base, y, 0.5).unwrap().value();
        let b = exp_mass_cell(&moved, y, 0.5 + v.dot(y)).unwrap().value();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }
}
