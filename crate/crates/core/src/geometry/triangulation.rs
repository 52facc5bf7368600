//! Regular triangulation of weighted points, obtained as the projection of
//! the lower convex hull of the lifted points `(y_i, phi_i)`.
//!
//! Points are inserted incrementally (Bowyer-Watson on the lifted hull) with
//! an infinite vertex closing the hull. All decisions use exact predicates.

use std::collections::HashMap;

use super::hull::{self, Boundary};
use super::predicates::{below_plane, orient2d};
use crate::{Error, Result, Vec2};

/// The vertex at infinity.
pub(crate) const INF: usize = usize::MAX;
const NONE: usize = usize::MAX;

/// Triangle with counterclockwise vertices. `nb[k]` is the triangle across
/// the edge opposite `v[k]`. An infinite triangle `(a, b, INF)` has the
/// outside of the hull to the left of `a -> b`.
#[derive(Copy, Clone, Debug)]
pub(crate) struct Tri {
    pub v: [usize; 3],
    pub nb: [usize; 3],
}

impl Tri {
    pub fn is_infinite(&self) -> bool {
        self.v.contains(&INF)
    }

    pub fn index_of(&self, vertex: usize) -> Option<usize> {
        self.v.iter().position(|&x| x == vertex)
    }
}

pub(crate) struct Triangulation<'a> {
    points: &'a [Vec2],
    phi: &'a [f64],
    pub tris: Vec<Tri>,
    alive: Vec<bool>,
    free: Vec<usize>,
    /// An alive triangle incident to each vertex, `NONE` for hidden ones.
    vertex_tri: Vec<usize>,
    /// Points that are not vertices of the lower hull.
    pub hidden: Vec<bool>,
    pub on_boundary: Vec<bool>,
    last: usize,
    /// Set once an inserted point is hidden or hides another.
    lost_vertex: bool,
    mark: Vec<u64>,
    epoch: u64,
}

/// Checks lengths, finiteness and distinctness.
pub(crate) fn validate(points: &[Vec2], phi: &[f64]) -> Result<()> {
    if points.len() != phi.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} weights",
            points.len(),
            phi.len()
        )));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!("point {i} is not finite")));
    }
    if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("weight {i} is not finite")));
    }
    if points.len() < 3 {
        return Err(Error::DegenerateSupport);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));
    if let Some(w) = order.windows(2).find(|w| points[w[0]] == points[w[1]]) {
        return Err(Error::InvalidInput(format!("points {} and {} coincide", w[0], w[1])));
    }
    Ok(())
}

impl<'a> Triangulation<'a> {
    /// Builds the regular triangulation. Vertices whose lift lies on the
    /// lower hull without being a vertex of it are reported as hidden.
    pub fn new(points: &'a [Vec2], phi: &'a [f64]) -> Result<Self> {
        validate(points, phi)?;
        let boundary = hull::classify(points, phi)?;
        let mut excluded = vec![false; points.len()];
        loop {
            let tri = Self::insert_all(points, phi, &boundary, &excluded, false)
                .expect("full build never stops early");
            // A vertex surrounded by at most two distinct planes lies in the
            // relative interior of a lower-hull edge or face. Such vertices are
            // removed and the triangulation rebuilt without them.
            let flat = tri.flat_vertices();
            if flat.is_empty() {
                return Ok(tri);
            }
            for i in flat {
                excluded[i] = true;
            }
        }
    }

    /// Whether every point is a vertex of the lower hull. Stops at the first
    /// hidden point.
    pub fn all_vertices_extreme(points: &'a [Vec2], phi: &'a [f64]) -> Result<bool> {
        validate(points, phi)?;
        let boundary = hull::classify(points, phi)?;
        if !boundary.hidden.is_empty() {
            return Ok(false);
        }
        let excluded = vec![false; points.len()];
        match Self::insert_all(points, phi, &boundary, &excluded, true) {
            None => Ok(false),
            Some(tri) => Ok(tri.flat_vertices().is_empty()),
        }
    }

    fn insert_all(
        points: &'a [Vec2],
        phi: &'a [f64],
        boundary: &Boundary,
        excluded: &[bool],
        stop_on_hidden: bool,
    ) -> Option<Self> {
        let n = points.len();
        let mut t = Triangulation {
            points,
            phi,
            tris: Vec::with_capacity(2 * n + 8),
            alive: Vec::with_capacity(2 * n + 8),
            free: Vec::new(),
            vertex_tri: vec![NONE; n],
            hidden: vec![false; n],
            on_boundary: boundary.on_boundary.clone(),
            last: 0,
            lost_vertex: false,
            mark: Vec::with_capacity(2 * n + 8),
            epoch: 0,
        };
        for &i in &boundary.hidden {
            t.hidden[i] = true;
        }
        for (i, &e) in excluded.iter().enumerate() {
            if e {
                t.hidden[i] = true;
            }
        }

        let h = boundary.strict.len();
        let seed = [boundary.strict[0], boundary.strict[h / 3], boundary.strict[2 * h / 3]];
        t.init(seed);
        for &i in boundary.strict.iter().chain(&boundary.collinear) {
            if !seed.contains(&i) {
                t.insert_boundary(i);
            }
        }

        let mut interior: Vec<usize> =
            (0..n).filter(|&i| !t.on_boundary[i] && !t.hidden[i]).collect();
        hilbert_sort(points, &mut interior);
        let mut cache = HashMap::new();
        for i in interior {
            t.insert_interior(i, &mut cache);
            if stop_on_hidden && t.lost_vertex {
                return None;
            }
        }
        Some(t)
    }

    fn lifted(&self, i: usize) -> (Vec2, f64) {
        (self.points[i], self.phi[i])
    }

    fn alloc(&mut self, tri: Tri) -> usize {
        if let Some(k) = self.free.pop() {
            self.tris[k] = tri;
            self.alive[k] = true;
            k
        } else {
            self.tris.push(tri);
            self.alive.push(true);
            self.mark.push(0);
            self.tris.len() - 1
        }
    }

    fn init(&mut self, [a, b, c]: [usize; 3]) {
        let f = Tri { v: [a, b, c], nb: [2, 3, 1] };
        let t1 = Tri { v: [b, a, INF], nb: [3, 2, 0] };
        let t2 = Tri { v: [c, b, INF], nb: [1, 3, 0] };
        let t3 = Tri { v: [a, c, INF], nb: [2, 1, 0] };
        for tri in [f, t1, t2, t3] {
            self.alloc(tri);
        }
        self.vertex_tri[a] = 0;
        self.vertex_tri[b] = 0;
        self.vertex_tri[c] = 0;
        self.last = 0;
    }

    /// Whether triangle `t` must be removed when `p` is inserted.
    fn conflict(&self, t: usize, p: usize) -> bool {
        let tri = &self.tris[t];
        let q = self.points[p];
        match tri.index_of(INF) {
            Some(k) => {
                let (a, b) = (self.points[tri.v[(k + 1) % 3]], self.points[tri.v[(k + 2) % 3]]);
                let o = orient2d(a, b, q);
                o > 0.0 || (o == 0.0 && strictly_between(a, b, q))
            }
            None => {
                let [a, b, c] = tri.v;
                below_plane(self.lifted(a), self.lifted(b), self.lifted(c), self.lifted(p)) > 0.0
            }
        }
    }

    fn insert_boundary(&mut self, p: usize) {
        let seed = (0..self.tris.len())
            .find(|&t| self.alive[t] && self.tris[t].is_infinite() && self.conflict(t, p))
            .expect("hull point sees an infinite triangle");
        let mut cache = HashMap::new();
        self.dig(p, seed, &mut cache);
    }

    fn insert_interior(&mut self, p: usize, cache: &mut HashMap<usize, usize>) {
        let t = self.locate(self.points[p]);
        if self.conflict(t, p) {
            self.dig(p, t, cache);
        } else {
            self.hidden[p] = true;
            self.lost_vertex = true;
        }
    }

    /// Removes the connected conflict region containing `seed` and fills the
    /// cavity with triangles joining `p` to its boundary.
    fn dig(&mut self, p: usize, seed: usize, start_of: &mut HashMap<usize, usize>) {
        self.epoch += 1;
        let (inside, outside) = (2 * self.epoch, 2 * self.epoch + 1);
        self.mark[seed] = inside;
        let mut region = vec![seed];
        let mut stack = vec![seed];
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let n = self.tris[t].nb[k];
                let v = self.tris[t].v;
                let edge = (v[(k + 1) % 3], v[(k + 2) % 3], n);
                if self.mark[n] == inside {
                    continue;
                }
                if self.mark[n] != outside && self.conflict(n, p) {
                    self.mark[n] = inside;
                    region.push(n);
                    stack.push(n);
                } else {
                    self.mark[n] = outside;
                    horizon.push(edge);
                }
            }
        }

        let mut on_horizon: Vec<usize> = horizon.iter().map(|e| e.0).collect();
        on_horizon.sort_unstable();
        for &t in &region {
            for v in self.tris[t].v {
                if v != INF && on_horizon.binary_search(&v).is_err() {
                    self.hidden[v] = true;
                    self.vertex_tri[v] = NONE;
                    self.lost_vertex = true;
                }
            }
            self.alive[t] = false;
        }
        self.free.extend_from_slice(&region);

        start_of.clear();
        let mut created = Vec::with_capacity(horizon.len());
        for &(u, w, outer) in &horizon {
            let t = self.alloc(Tri { v: [u, w, p], nb: [NONE, NONE, outer] });
            let o = &mut self.tris[outer];
            let k = (0..3).find(|&k| o.v[k] != u && o.v[k] != w).expect("outer shares edge");
            o.nb[k] = t;
            start_of.insert(u, t);
            created.push(t);
        }
        for &t in &created {
            let [u, w, _] = self.tris[t].v;
            let across_wp = start_of[&w];
            self.tris[t].nb[0] = across_wp;
            self.tris[across_wp].nb[1] = t;
            if u != INF {
                self.vertex_tri[u] = t;
            }
        }
        self.hidden[p] = false;
        self.vertex_tri[p] = created[0];
        self.last = created
            .iter()
            .copied()
            .find(|&t| !self.tris[t].is_infinite())
            .unwrap_or(self.last);
    }

    /// Finite triangle containing `q`, which must lie in the convex hull.
    pub fn locate(&self, q: Vec2) -> usize {
        let mut t = self.last;
        if !self.alive[t] || self.tris[t].is_infinite() {
            return self.scan(q);
        }
        let limit = 4 * self.tris.len() + 16;
        'walk: for step in 0..limit {
            let tri = self.tris[t];
            for j in 0..3 {
                let k = (j + step) % 3;
                let (a, b) = (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
                if orient2d(self.points[a], self.points[b], q) < 0.0 {
                    t = tri.nb[k];
                    if self.tris[t].is_infinite() {
                        break 'walk;
                    }
                    continue 'walk;
                }
            }
            return t;
        }
        self.scan(q)
    }

    fn scan(&self, q: Vec2) -> usize {
        self.finite()
            .find(|&t| {
                let [a, b, c] = self.tris[t].v.map(|i| self.points[i]);
                orient2d(a, b, q) >= 0.0 && orient2d(b, c, q) >= 0.0 && orient2d(c, a, q) >= 0.0
            })
            .expect("query point inside the convex hull")
    }

    /// Indices of alive finite triangles.
    pub fn finite(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tris.len()).filter(|&t| self.alive[t] && !self.tris[t].is_infinite())
    }

    /// Triangles around vertex `i` in counterclockwise order, each with the
    /// position of `i` in it.
    pub fn ring(&self, i: usize) -> Vec<(usize, usize)> {
        let start = self.vertex_tri[i];
        if start == NONE {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut t = start;
        loop {
            let k = self.tris[t].index_of(i).expect("vertex in incident triangle");
            out.push((t, k));
            t = self.tris[t].nb[(k + 1) % 3];
            if t == start {
                return out;
            }
        }
    }

    /// Whether finite triangle `t` and its finite neighbor across edge `k`
    /// lie in one plane after lifting.
    pub fn coplanar_across(&self, t: usize, k: usize) -> bool {
        let tri = self.tris[t];
        let n = self.tris[tri.nb[k]];
        let (a, b) = (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
        let d = n.v.into_iter().find(|&x| x != a && x != b).expect("neighbor has a third vertex");
        let [p, q, r] = tri.v;
        below_plane(self.lifted(p), self.lifted(q), self.lifted(r), self.lifted(d)) == 0.0
    }

    /// Interior vertices at which at most two distinct lifted planes meet.
    fn flat_vertices(&self) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| !self.hidden[i] && !self.on_boundary[i])
            .filter(|&i| {
                let creases = self
                    .ring(i)
                    .into_iter()
                    .filter(|&(t, k)| !self.coplanar_across(t, (k + 1) % 3))
                    .count();
                creases <= 2
            })
            .collect()
    }

    /// Height of the lower hull above `q` (inside the convex hull).
    pub fn envelope_at(&self, q: Vec2) -> f64 {
        let t = self.locate(q);
        let [a, b, c] = self.tris[t].v;
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        let area = (pb - pa).cross(pc - pa);
        let la = (pb - q).cross(pc - q) / area;
        let lb = (pc - q).cross(pa - q) / area;
        let lc = 1.0 - la - lb;
        la * self.phi[a] + lb * self.phi[b] + lc * self.phi[c]
    }
}

/// For collinear `a, b, q`: whether `q` lies strictly between `a` and `b`.
fn strictly_between(a: Vec2, b: Vec2, q: Vec2) -> bool {
    let (s, ta, tb) = if a.x != b.x { (q.x, a.x, b.x) } else { (q.y, a.y, b.y) };
    ta.min(tb) < s && s < ta.max(tb)
}

/// Sorts indices along a Hilbert curve over the bounding box, so that
/// consecutive insertions are spatially close.
fn hilbert_sort(points: &[Vec2], idx: &mut [usize]) {
    const ORDER: u32 = 16;
    if idx.is_empty() {
        return;
    }
    let (mut lo, mut hi) = (points[idx[0]], points[idx[0]]);
    for &i in idx.iter() {
        let p = points[i];
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let side = (1u32 << ORDER) - 1;
    let scale = |v: f64, l: f64, h: f64| {
        if h > l {
            (((v - l) / (h - l)) * f64::from(side)).round() as u32
        } else {
            0
        }
    };
    idx.sort_by_cached_key(|&i| {
        let p = points[i];
        hilbert_index(scale(p.x, lo.x, hi.x), scale(p.y, lo.y, hi.y), ORDER)
    });
}

fn hilbert_index(mut x: u32, mut y: u32, order: u32) -> u64 {
    let n = 1u32 << order;
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}
