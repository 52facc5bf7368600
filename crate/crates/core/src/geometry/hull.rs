//! Planar convex hull of the support and the lower hull of lifted points
//! lying on its edges.

use super::predicates::{below_chord, orient2d};
use crate::{Error, Result, Vec2};

/// How the points on the boundary of the convex hull enter the regular
/// triangulation.
#[derive(Clone, Debug)]
pub(crate) struct Boundary {
    /// Strictly convex hull vertices, counterclockwise.
    pub strict: Vec<usize>,
    /// Points in the relative interior of a hull edge that are vertices of
    /// the lower hull of the lifted points on that edge.
    pub collinear: Vec<usize>,
    /// Points in the relative interior of a hull edge whose lift lies on or
    /// above the lower hull of that edge.
    pub hidden: Vec<usize>,
    pub on_boundary: Vec<bool>,
}

/// Requires at least three distinct points, not all collinear.
pub(crate) fn classify(points: &[Vec2], phi: &[f64]) -> Result<Boundary> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));

    let (first, last) = (points[order[0]], points[order[order.len() - 1]]);
    if order.iter().all(|&i| orient2d(first, last, points[i]) == 0.0) {
        return Err(Error::DegenerateSupport);
    }

    // Monotone chain keeping collinear points: pop only on clockwise turns.
    let chain = |iter: &mut dyn Iterator<Item = usize>| {
        let mut h: Vec<usize> = Vec::new();
        for i in iter {
            while h.len() >= 2
                && orient2d(points[h[h.len() - 2]], points[h[h.len() - 1]], points[i]) < 0.0
            {
                h.pop();
            }
            h.push(i);
        }
        h.pop();
        h
    };
    let mut hull = chain(&mut order.iter().copied());
    hull.extend(chain(&mut order.iter().rev().copied()));

    let m = hull.len();
    let is_strict: Vec<bool> = (0..m)
        .map(|k| {
            let (a, b, c) = (hull[(k + m - 1) % m], hull[k], hull[(k + 1) % m]);
            orient2d(points[a], points[b], points[c]) > 0.0
        })
        .collect();
    let start = is_strict.iter().position(|&s| s).expect("hull has a corner");

    let mut boundary = Boundary {
        strict: Vec::new(),
        collinear: Vec::new(),
        hidden: Vec::new(),
        on_boundary: vec![false; points.len()],
    };
    for &i in &hull {
        boundary.on_boundary[i] = true;
    }

    let mut k = start;
    loop {
        let a = hull[k];
        boundary.strict.push(a);
        let mut run = vec![a];
        let mut j = (k + 1) % m;
        while !is_strict[j] {
            run.push(hull[j]);
            j = (j + 1) % m;
        }
        run.push(hull[j]);
        if run.len() > 2 {
            lower_chain_on_edge(points, phi, &run, &mut boundary);
        }
        k = j;
        if k == start {
            break;
        }
    }
    Ok(boundary)
}

/// One-dimensional lower hull of `(s, phi)` along a hull edge, where `s` is
/// the coordinate that varies most along the edge (exact and monotone).
fn lower_chain_on_edge(points: &[Vec2], phi: &[f64], run: &[usize], out: &mut Boundary) {
    let (a, b) = (points[run[0]], points[run[run.len() - 1]]);
    let d = b - a;
    let param = |i: usize| {
        let p = points[i];
        let s = if d.x.abs() >= d.y.abs() { p.x } else { p.y };
        let forward = if d.x.abs() >= d.y.abs() { d.x > 0.0 } else { d.y > 0.0 };
        if forward {
            s
        } else {
            -s
        }
    };
    let mut chain: Vec<usize> = vec![run[0]];
    for &q in &run[1..] {
        while chain.len() >= 2 {
            let (u, v) = (chain[chain.len() - 2], chain[chain.len() - 1]);
            if below_chord(param(u), phi[u], param(v), phi[v], param(q), phi[q]) {
                break;
            }
            out.hidden.push(v);
            chain.pop();
        }
        chain.push(q);
    }
    out.collinear.extend_from_slice(&chain[1..chain.len() - 1]);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: i32) -> Vec<Vec2> {
        let mut p = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                p.push(Vec2::new(i as f64, j as f64));
            }
        }
        p
    }

    #[test]
    fn grid_boundary_is_classified() {
        let p = grid(3);
        let phi: Vec<f64> = p.iter().map(|q| 0.5 * q.norm_squared()).collect();
        let b = classify(&p, &phi).unwrap();
        assert_eq!(b.strict.len(), 4);
        assert_eq!(b.collinear.len(), 8);
        assert!(b.hidden.is_empty());
        assert_eq!(b.on_boundary.iter().filter(|&&x| x).count(), 12);
        // counterclockwise
        let s = &b.strict;
        assert!(orient2d(p[s[0]], p[s[1]], p[s[2]]) > 0.0);
    }

    #[test]
    fn flat_edge_points_are_hidden() {
        let p = grid(2);
        let phi = vec![0.0; p.len()];
        let b = classify(&p, &phi).unwrap();
        assert_eq!(b.hidden.len(), 4);
        assert!(b.collinear.is_empty());
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let p = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(matches!(classify(&p, &[0.0; 3]), Err(Error::DegenerateSupport)));
    }
}
