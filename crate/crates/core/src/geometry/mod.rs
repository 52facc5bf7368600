//! Laguerre (power) diagrams of weighted points in the plane, membership in
//! the set of weight vectors whose cells all have nonempty interior, and the
//! discrete Legendre transforms `Phi*` and `Phi**`.

mod hull;
mod predicates;
mod triangulation;

use std::ops::Deref;

use triangulation::{Triangulation, INF};

use crate::{Error, Result, Vec2};

/// Finite weights `Phi_i`, one per support point.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("weight {i} is not finite")));
        }
        Ok(WeightVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Geometry of one diagram edge.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum EdgeGeometry {
    Segment { start: Vec2, end: Vec2 },
    /// Half-line `origin + t * direction`, `t >= 0`, with a unit direction.
    Ray { origin: Vec2, direction: Vec2 },
}

impl EdgeGeometry {
    /// Some point of the edge other than its endpoints.
    pub fn interior_point(&self) -> Vec2 {
        match *self {
            EdgeGeometry::Segment { start, end } => (start + end) * 0.5,
            EdgeGeometry::Ray { origin, direction } => origin + direction,
        }
    }
}

/// The common boundary of two adjacent cells.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DiagramEdge {
    pub i: usize,
    pub j: usize,
    pub geometry: EdgeGeometry,
}

/// A Laguerre cell with nonempty interior.
///
/// A bounded cell is the polygon `vertices` (counterclockwise) and
/// `neighbors[k]` owns the edge `vertices[k] -> vertices[k + 1]`.
///
/// An unbounded cell is entered along the ray ending at `vertices[0]` with
/// direction `-ray_in`, follows the vertices, and leaves along the ray from
/// the last vertex with direction `ray_out`. Then `neighbors[0]` owns the
/// incoming ray, `neighbors[k]` the segment ending at `vertices[k]`, and the
/// last entry the outgoing ray. Every edge, including rays, separates two
/// cells, so a neighbor always exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub owner: usize,
    pub vertices: Vec<Vec2>,
    pub ray_in: Option<Vec2>,
    pub ray_out: Option<Vec2>,
    pub neighbors: Vec<usize>,
}

impl Cell {
    pub fn is_bounded(&self) -> bool {
        self.ray_in.is_none()
    }

    /// Boundary pieces in counterclockwise order, each with the neighbor on
    /// the other side. Rays keep their outward (recession) direction; the
    /// incoming ray is traversed against it.
    pub fn edges(&self) -> Vec<(EdgeGeometry, usize)> {
        let v = &self.vertices;
        let m = v.len();
        match (self.ray_in, self.ray_out) {
            (Some(din), Some(dout)) => {
                let mut out = Vec::with_capacity(m + 1);
                out.push((EdgeGeometry::Ray { origin: v[0], direction: din }, self.neighbors[0]));
                for k in 0..m - 1 {
                    out.push((
                        EdgeGeometry::Segment { start: v[k], end: v[k + 1] },
                        self.neighbors[k + 1],
                    ));
                }
                out.push((EdgeGeometry::Ray { origin: v[m - 1], direction: dout }, self.neighbors[m]));
                out
            }
            _ => (0..m)
                .map(|k| {
                    (EdgeGeometry::Segment { start: v[k], end: v[(k + 1) % m] }, self.neighbors[k])
                })
                .collect(),
        }
    }

    /// Shoelace area; infinite for unbounded cells.
    pub fn area(&self) -> f64 {
        if !self.is_bounded() {
            return f64::INFINITY;
        }
        let v = &self.vertices;
        let m = v.len();
        0.5 * (0..m).map(|k| v[k].cross(v[(k + 1) % m])).sum::<f64>()
    }
}

/// Laguerre diagram together with its dual regular triangulation.
#[derive(Clone, Debug)]
pub struct LaguerreDiagram {
    /// Cells with nonempty interior, ordered by owner.
    pub cells: Vec<Cell>,
    pub edges: Vec<DiagramEdge>,
    /// Diagram vertices; lifted-coplanar triangles share one vertex.
    pub vertices: Vec<Vec2>,
    /// Counterclockwise triangles of the regular triangulation.
    pub triangulation: Vec<[usize; 3]>,
    cell_of: Vec<Option<usize>>,
}

impl LaguerreDiagram {
    /// The cell owned by point `i`, if its interior is nonempty.
    pub fn cell(&self, i: usize) -> Option<&Cell> {
        self.cell_of.get(i).copied().flatten().map(|k| &self.cells[k])
    }

    /// Number of support points the diagram was built for.
    pub fn num_points(&self) -> usize {
        self.cell_of.len()
    }

    /// Whether every point owns a cell with nonempty interior.
    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.cell_of.len()
    }
}

/// Union-find over triangle indices.
struct Classes(Vec<usize>);

impl Classes {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Point where the affine functions `<x, y_k> - phi_k` of the three
/// triangle vertices agree.
fn dual_vertex(points: &[Vec2], phi: &[f64], [a, b, c]: [usize; 3]) -> Vec2 {
    let e1 = points[b] - points[a];
    let e2 = points[c] - points[a];
    let db = phi[b] - phi[a];
    let dc = phi[c] - phi[a];
    let det = e1.cross(e2);
    Vec2::new((db * e2.y - dc * e1.y) / det, (dc * e1.x - db * e2.x) / det)
}

/// Outward unit normal of the hull edge `a -> b` (hull counterclockwise).
fn outward_normal(a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    Vec2::new(d.y, -d.x).normalized()
}

/// Builds the Laguerre diagram of the weighted points by dualizing the lower
/// convex hull of the lifts `(y_i, phi_i)`.
pub fn build_diagram(points: &[Vec2], phi: &[f64]) -> Result<LaguerreDiagram> {
    let tri = Triangulation::new(points, phi)?;
    let finite: Vec<usize> = tri.finite().collect();

    let mut classes = Classes((0..tri.tris.len()).collect());
    for &t in &finite {
        for k in 0..3 {
            let n = tri.tris[t].nb[k];
            if t < n && !tri.tris[n].is_infinite() && tri.coplanar_across(t, k) {
                classes.union(t, n);
            }
        }
    }
    let mut vertex_of = vec![usize::MAX; tri.tris.len()];
    let mut vertices = Vec::new();
    for &t in &finite {
        let r = classes.find(t);
        if vertex_of[r] == usize::MAX {
            vertex_of[r] = vertices.len();
            vertices.push(dual_vertex(points, phi, tri.tris[r].v));
        }
        vertex_of[t] = vertex_of[r];
    }

    let mut edges = Vec::new();
    for &t in &finite {
        let v = tri.tris[t].v;
        for k in 0..3 {
            let n = tri.tris[t].nb[k];
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            let origin = vertices[vertex_of[t]];
            if tri.tris[n].is_infinite() {
                let direction = outward_normal(points[a], points[b]);
                edges.push(DiagramEdge { i: a, j: b, geometry: EdgeGeometry::Ray { origin, direction } });
            } else if t < n && vertex_of[t] != vertex_of[n] {
                let end = vertices[vertex_of[n]];
                edges.push(DiagramEdge { i: a, j: b, geometry: EdgeGeometry::Segment { start: origin, end } });
            }
        }
    }

    let mut cells = Vec::new();
    let mut cell_of = vec![None; points.len()];
    for i in 0..points.len() {
        if tri.hidden[i] {
            continue;
        }
        let ring = tri.ring(i);
        let class = |(t, _): (usize, usize)| {
            if tri.tris[t].is_infinite() {
                usize::MAX
            } else {
                vertex_of[t]
            }
        };
        let len = ring.len();
        let (start, rays) = if tri.on_boundary[i] {
            let b = (0..len)
                .find(|&r| tri.tris[ring[r].0].is_infinite() && !tri.tris[ring[(r + 1) % len].0].is_infinite())
                .expect("hull vertex has infinite triangles");
            (b + 1, true)
        } else {
            match (0..len).find(|&r| class(ring[r]) != class(ring[(r + len - 1) % len])) {
                Some(s) => (s, false),
                None => continue,
            }
        };

        let mut cell = Cell { owner: i, vertices: Vec::new(), ray_in: None, ray_out: None, neighbors: Vec::new() };
        if rays {
            let (tb, kb) = ring[start - 1];
            let next = tri.tris[tb].v[(kb + 1) % 3];
            let next = if next == INF { tri.tris[tb].v[(kb + 2) % 3] } else { next };
            cell.neighbors.push(next);
            cell.ray_in = Some(outward_normal(points[i], points[next]));
        }
        let mut prev_class = usize::MAX - 1;
        for r in 0..len {
            let cur = ring[(start + r) % len];
            if tri.tris[cur.0].is_infinite() {
                break;
            }
            if class(cur) != prev_class {
                cell.vertices.push(vertices[class(cur)]);
                prev_class = class(cur);
            }
            if class(cur) != class(ring[(start + r + 1) % len]) {
                let (t, k) = cur;
                cell.neighbors.push(tri.tris[t].v[(k + 2) % 3]);
            }
        }
        if rays {
            let prev = *cell.neighbors.last().expect("outgoing ray neighbor");
            cell.ray_out = Some(outward_normal(points[prev], points[i]));
        } else if cell.vertices.len() < 3 {
            continue;
        }
        cell_of[i] = Some(cells.len());
        cells.push(cell);
    }

    let triangulation = finite.iter().map(|&t| tri.tris[t].v).collect();
    Ok(LaguerreDiagram { cells, edges, vertices, triangulation, cell_of })
}

/// Whether every Laguerre cell has nonempty interior, i.e. every lifted point
/// is a vertex of the lower convex hull. Does not build the diagram.
pub fn in_u(points: &[Vec2], phi: &[f64]) -> Result<bool> {
    Triangulation::all_vertices_extreme(points, phi)
}

/// `Phi*(x) = max_i <x, y_i> - phi_i` by a linear scan.
pub fn eval_phi_star(points: &[Vec2], phi: &[f64], x: Vec2) -> f64 {
    points
        .iter()
        .zip(phi)
        .map(|(y, p)| x.dot(*y) - p)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Index attaining the maximum in [`eval_phi_star`] (first one on ties).
pub fn phi_star_argmax(points: &[Vec2], phi: &[f64], x: Vec2) -> usize {
    let mut best = 0;
    let mut value = f64::NEG_INFINITY;
    for (i, (y, p)) in points.iter().zip(phi).enumerate() {
        let v = x.dot(*y) - p;
        if v > value {
            value = v;
            best = i;
        }
    }
    best
}

/// The convex envelope `Phi**` at the support points.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerEnvelope {
    /// `Phi**(y_i)`; equals `phi_i` exactly at lower-hull vertices.
    pub values: Vec<f64>,
    /// Whether point `i` is a vertex of the lower hull.
    pub is_vertex: Vec<bool>,
    pub triangulation: Vec<[usize; 3]>,
}

pub fn lower_envelope(points: &[Vec2], phi: &[f64]) -> Result<LowerEnvelope> {
    let tri = Triangulation::new(points, phi)?;
    let values = (0..points.len())
        .map(|i| if tri.hidden[i] { tri.envelope_at(points[i]).min(phi[i]) } else { phi[i] })
        .collect();
    let is_vertex = tri.hidden.iter().map(|&h| !h).collect();
    let triangulation = tri.finite().map(|t| tri.tris[t].v).collect();
    Ok(LowerEnvelope { values, is_vertex, triangulation })
}
