//! Exact orientation predicates on plane points and their lifts `(y, phi)`.

use robust::{Coord, Coord3D};

use crate::Vec2;

#[inline]
fn coord(p: Vec2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

#[inline]
fn lift(p: Vec2, h: f64) -> Coord3D<f64> {
    Coord3D { x: p.x, y: p.y, z: h }
}

/// Positive if `a, b, c` turn counterclockwise, zero if collinear.
#[inline]
pub(crate) fn orient2d(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive if the lifted point `(d, hd)` lies strictly below the plane
/// through the lifted points `a, b, c`, which must be counterclockwise in
/// the plane. Zero if the four lifted points are coplanar.
#[inline]
pub(crate) fn below_plane(
    (a, ha): (Vec2, f64),
    (b, hb): (Vec2, f64),
    (c, hc): (Vec2, f64),
    (d, hd): (Vec2, f64),
) -> f64 {
    robust::orient3d(lift(a, ha), lift(b, hb), lift(c, hc), lift(d, hd))
}

/// Positive if `(s2, h2)` lies strictly below the line through
/// `(s1, h1)` and `(s3, h3)`, for `s1 < s2 < s3`.
#[inline]
pub(crate) fn below_chord(s1: f64, h1: f64, s2: f64, h2: f64, s3: f64, h3: f64) -> bool {
    robust::orient2d(
        Coord { x: s1, y: h1 },
        Coord { x: s2, y: h2 },
        Coord { x: s3, y: h3 },
    ) > 0.0
}
