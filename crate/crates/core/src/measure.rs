//! Finitely supported target measures, the five discretizations used in the
//! convergence experiments, and the closed-form potentials they approximate.

use std::f64::consts::{LN_2, PI};

use crate::numeric::{self, Compensated};
use crate::{Error, Result, Vec2};

const MASS_TOLERANCE: f64 = 1e-12;
const CENTERING_TOLERANCE: f64 = 1e-12;
const SPREAD_TOLERANCE: f64 = 1e-12;

/// Number of directions on the unit circle scanned by [`diagnostics`].
pub const SPREAD_DIRECTIONS: usize = 3600;

/// A centered probability measure on finitely many distinct points of the
/// plane, not supported on a line.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec2>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates and wraps support points and their masses.
    pub fn new(points: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.len() < 3 {
            return Err(Error::InvalidMeasure("fewer than three support points".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMeasure(format!("point {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "weight {i} = {} is not strictly positive",
                weights[i]
            )));
        }
        let total = numeric::sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        if let Some((i, j)) = find_duplicate(&points) {
            return Err(Error::InvalidMeasure(format!("points {i} and {j} coincide")));
        }
        let measure = DiscreteMeasure { points, weights };
        let mean = measure.mean();
        if mean.x.abs() > CENTERING_TOLERANCE || mean.y.abs() > CENTERING_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "measure is not centered: mean = ({:e}, {:e})",
                mean.x, mean.y
            )));
        }
        let smallest = measure.smallest_covariance_eigenvalue();
        if smallest <= SPREAD_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "support is (numerically) contained in a line: covariance eigenvalue {smallest:e}"
            )));
        }
        Ok(measure)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean norm of the weight vector.
    pub fn weight_norm(&self) -> f64 {
        numeric::norm(&self.weights)
    }

    /// Barycenter `sum_i w_i y_i`.
    pub fn mean(&self) -> Vec2 {
        let mut x = Compensated::default();
        let mut y = Compensated::default();
        for (p, &w) in self.points.iter().zip(&self.weights) {
            x.add_product(w, p.x);
            y.add_product(w, p.y);
        }
        Vec2::new(x.value(), y.value())
    }

    /// Smallest eigenvalue of the 2x2 covariance matrix.
    pub fn smallest_covariance_eigenvalue(&self) -> f64 {
        let m = self.mean();
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let d = *p - m;
            sxx += w * d.x * d.x;
            sxy += w * d.x * d.y;
            syy += w * d.y * d.y;
        }
        let half_trace = 0.5 * (sxx + syy);
        let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
        half_trace - disc
    }
}

fn find_duplicate(points: &[Vec2]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    order
        .windows(2)
        .find(|w| points[w[0]] == points[w[1]])
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// The five discretization rules of the convergence experiments.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum TestCase {
    /// Uniform weights on the uniform grid of the square `[-1, 1]^2`.
    SquareUniform = 1,
    /// Uniform weights on the uniform grid of the triangle
    /// `(-1,-1), (2,-1), (-1,2)`.
    TriangleUniform = 2,
    /// Square grid with P1-lumped weights.
    SquareLumped = 3,
    /// Triangle grid with P1-lumped weights.
    TriangleLumped = 4,
    /// Tensor grid adapted to the exact solution, P1-lumped weights.
    SquareAdapted = 5,
}

impl TestCase {
    pub const ALL: [TestCase; 5] = [
        TestCase::SquareUniform,
        TestCase::TriangleUniform,
        TestCase::SquareLumped,
        TestCase::TriangleLumped,
        TestCase::SquareAdapted,
    ];

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(TestCase::SquareUniform),
            2 => Ok(TestCase::TriangleUniform),
            3 => Ok(TestCase::SquareLumped),
            4 => Ok(TestCase::TriangleLumped),
            5 => Ok(TestCase::SquareAdapted),
            other => Err(Error::UnknownTestCase(other)),
        }
    }

    pub fn id(self) -> u32 {
        self as u32
    }

    /// The continuous problem this discretization approximates.
    pub fn exact(self) -> ExactSolution {
        match self {
            TestCase::SquareUniform | TestCase::SquareLumped | TestCase::SquareAdapted => {
                ExactSolution::Square
            }
            TestCase::TriangleUniform | TestCase::TriangleLumped => ExactSolution::Triangle,
        }
    }

    /// Number of support points produced for resolution `n`.
    pub fn support_size(self, n: usize) -> usize {
        match self.exact() {
            ExactSolution::Square => (n + 1) * (n + 1),
            ExactSolution::Triangle => (3 * n + 2) * (3 * n + 4) / 8,
        }
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidResolution(n));
    }
    Ok(())
}

/// Builds the discrete measure of test case `id` at resolution `n` (`h = 2/n`).
pub fn build_test_case(id: u32, n: usize) -> Result<DiscreteMeasure> {
    let case = TestCase::from_id(id)?;
    check_resolution(n)?;
    let (points, weights) = match case {
        TestCase::SquareUniform => {
            let t = uniform_nodes(n);
            let points = tensor_points(&t);
            let w = 1.0 / ((n + 1) * (n + 1)) as f64;
            let weights = vec![w; points.len()];
            (points, weights)
        }
        TestCase::SquareLumped => {
            let t = uniform_nodes(n);
            (tensor_points(&t), lumped_square_weights(&t))
        }
        TestCase::SquareAdapted => {
            let t = adapted_grid(n)?;
            (tensor_points(&t), lumped_square_weights(&t))
        }
        TestCase::TriangleUniform => {
            let points = triangle_points(n);
            let w = 8.0 / ((3 * n + 2) * (3 * n + 4)) as f64;
            let weights = vec![w; points.len()];
            (points, weights)
        }
        TestCase::TriangleLumped => (triangle_points(n), lumped_triangle_weights(n)),
    };
    DiscreteMeasure::new(points, weights)
}

/// `j h` for `j = -n/2 ..= n/2`.
fn uniform_nodes(n: usize) -> Vec<f64> {
    let h = 2.0 / n as f64;
    let half = (n / 2) as i64;
    (-half..=half).map(|j| j as f64 * h).collect()
}

/// Row-major tensor grid: the first coordinate is the outer index.
fn tensor_points(t: &[f64]) -> Vec<Vec2> {
    t.iter()
        .flat_map(|&a| t.iter().map(move |&b| Vec2::new(a, b)))
        .collect()
}

/// Grid points `(j1 h, j2 h)` with `j1, j2 >= -n/2` and `j1 + j2 <= n/2`.
fn triangle_points(n: usize) -> Vec<Vec2> {
    let h = 2.0 / n as f64;
    let half = (n / 2) as i64;
    let mut points = Vec::with_capacity((3 * n + 2) * (3 * n + 4) / 8);
    for j1 in -half..=(n as i64) {
        for j2 in -half..=(half - j1) {
            points.push(Vec2::new(j1 as f64 * h, j2 as f64 * h));
        }
    }
    points
}

/// Integrals of the piecewise-affine hat functions against the uniform
/// probability measure on `[-1, 1]^2` (density 1/4), for the tensor grid
/// `t x t` split into triangles along the anti-diagonal of each rectangle.
///
/// A node touches the lower-left triangle of its north-east rectangle, the
/// upper-right triangle of its south-west rectangle, and both triangles of
/// the north-west and south-east rectangles. Each triangle contributes
/// `area / 3`.
fn lumped_square_weights(t: &[f64]) -> Vec<f64> {
    let m = t.len();
    let spacing_below = |a: usize| if a == 0 { 0.0 } else { t[a] - t[a - 1] };
    let spacing_above = |a: usize| if a + 1 == m { 0.0 } else { t[a + 1] - t[a] };
    let mut weights = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let (xm, xp) = (spacing_below(a), spacing_above(a));
            let (ym, yp) = (spacing_below(b), spacing_above(b));
            // Grouped so that mirror-image nodes round identically.
            let area = 0.5 * (xp * yp + xm * ym) + (xm * yp + xp * ym);
            weights.push(area / 12.0);
        }
    }
    weights
}

/// Hat-function integrals against the uniform probability measure on the
/// triangle (density 2/9), on the uniform grid of [`triangle_points`].
fn lumped_triangle_weights(n: usize) -> Vec<f64> {
    let h = 2.0 / n as f64;
    let top = 3 * n / 2; // largest index sum inside the triangle
    let half_cell = 0.5 * h * h;
    let mut weights = Vec::new();
    for i1 in 0..=top {
        for i2 in 0..=(top - i1) {
            let s = i1 + i2;
            let mut count = 0u32;
            // north-east rectangle, lower-left triangle
            if s < top {
                count += 1;
            }
            // south-west rectangle, upper-right triangle
            if i1 > 0 && i2 > 0 {
                count += 1;
            }
            // north-west rectangle: lower-left always inside, upper-right if s < top
            if i1 > 0 {
                count += 1 + u32::from(s < top);
            }
            // south-east rectangle: same pattern
            if i2 > 0 {
                count += 1 + u32::from(s < top);
            }
            weights.push(f64::from(count) * half_cell / 3.0 * (2.0 / 9.0));
        }
    }
    weights
}

/// `t log t` with `0 log 0 = 0` and `+inf` for negative arguments. Arguments
/// in `[-1e-12, 0)` are treated as rounding noise on the boundary and map to 0.
pub(crate) fn xlogx(t: f64) -> f64 {
    if t > 0.0 {
        t * t.ln()
    } else if t >= -1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `u(t) = (1+t) log(1+t) + (1-t) log(1-t)`, the one-dimensional factor of
/// the square's exact dual potential.
pub fn adapted_profile(t: f64) -> f64 {
    xlogx(1.0 + t) + xlogx(1.0 - t)
}

/// Maximum of `chord - u` on `[a, b]`, where `chord` interpolates `u` at the
/// endpoints. Since `u'(t) = log((1+t)/(1-t))`, the maximizer is where
/// `u'` equals the chord slope `s`, i.e. `t = tanh(s/2)`.
pub fn interpolation_error(a: f64, b: f64) -> f64 {
    let (ua, ub) = (adapted_profile(a), adapted_profile(b));
    let slope = (ub - ua) / (b - a);
    let t = (0.5 * slope).tanh().clamp(a, b);
    (ua + slope * (t - a) - adapted_profile(t)).max(0.0)
}

/// The `n + 1` nodes `-1 = t_{-n/2} < ... < t_{n/2} = 1` obtained by
/// repeatedly bisecting an interval with the largest interpolation error of
/// [`adapted_profile`].
///
/// `u` is even, so the greedy process starting from `{-1, 1}` first adds 0
/// and then always bisects mirror pairs of intervals. The nodes are therefore
/// generated on `[0, 1]` (ties resolved towards the left) and reflected,
/// which makes the grid exactly symmetric.
pub fn adapted_grid(n: usize) -> Result<Vec<f64>> {
    check_resolution(n)?;
    let mut half = vec![0.0, 1.0];
    let mut errors = vec![interpolation_error(0.0, 1.0)];
    for _ in 1..n / 2 {
        let mut worst = 0;
        for (k, &e) in errors.iter().enumerate() {
            if e > errors[worst] {
                worst = k;
            }
        }
        let (a, b) = (half[worst], half[worst + 1]);
        let mid = 0.5 * (a + b);
        half.insert(worst + 1, mid);
        errors[worst] = interpolation_error(a, mid);
        errors.insert(worst + 1, interpolation_error(mid, b));
    }
    let mut nodes: Vec<f64> = half.iter().skip(1).rev().map(|t| -t).collect();
    nodes.extend_from_slice(&half);
    Ok(nodes)
}

/// Closed-form potentials of the two continuous problems.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ExactSolution {
    /// Uniform probability measure on `[-1, 1]^2`.
    Square,
    /// Uniform probability measure on the triangle `(-1,-1), (2,-1), (-1,2)`.
    Triangle,
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl ExactSolution {
    /// The convex potential `psi` whose moment measure is the uniform measure.
    pub fn psi(self, x: Vec2) -> f64 {
        match self {
            ExactSolution::Square => 2.0 * softplus(x.x) - x.x + 2.0 * softplus(x.y) - x.y,
            ExactSolution::Triangle => {
                let m = x.x.max(x.y).max(0.0);
                let lse = m + ((-m).exp() + (x.x - m).exp() + (x.y - m).exp()).ln();
                3.0 * lse - x.x - x.y - LN_2
            }
        }
    }

    /// The Legendre transform `phi = psi*`, equal to `+inf` off the support.
    pub fn phi(self, y: Vec2) -> f64 {
        match self {
            ExactSolution::Square => {
                adapted_profile(y.x) + adapted_profile(y.y) - 4.0 * LN_2
            }
            ExactSolution::Triangle => {
                xlogx(1.0 + y.x) + xlogx(1.0 + y.y) + xlogx(1.0 - y.x - y.y) - 3.0 * 3f64.ln()
                    + LN_2
            }
        }
    }

    /// Vertices of the support polygon, counterclockwise.
    pub fn support(self) -> Vec<Vec2> {
        match self {
            ExactSolution::Square => vec![
                Vec2::new(-1.0, -1.0),
                Vec2::new(1.0, -1.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(-1.0, 1.0),
            ],
            ExactSolution::Triangle => vec![
                Vec2::new(-1.0, -1.0),
                Vec2::new(2.0, -1.0),
                Vec2::new(-1.0, 2.0),
            ],
        }
    }

    /// Largest distance between two support vertices.
    pub fn support_diameter(self) -> f64 {
        let s = self.support();
        let mut d: f64 = 0.0;
        for a in &s {
            for b in &s {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }
}

/// Exact solution associated with test case `id`.
pub fn exact_solution(id: u32) -> Result<ExactSolution> {
    TestCase::from_id(id).map(TestCase::exact)
}

/// Scale constants of a measure, used to compare against the stability
/// estimate.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MeasureDiagnostics {
    /// `sum_i w_i |y_i|`, the smallest admissible outer radius constant.
    pub mean_norm: f64,
    /// Approximation of `inf_{|w| = 1} sum_i w_i |<w, y_i>|`, taken over
    /// [`SPREAD_DIRECTIONS`] equally spaced directions. Since the infimum is
    /// over the whole circle this overestimates it slightly.
    pub directional_spread: f64,
}

pub fn diagnostics(nu: &DiscreteMeasure) -> MeasureDiagnostics {
    let mean_norm = numeric::sum(nu.points.iter().zip(&nu.weights).map(|(p, w)| w * p.norm()));
    let directional_spread = (0..SPREAD_DIRECTIONS)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / SPREAD_DIRECTIONS as f64;
            let dir = Vec2::new(theta.cos(), theta.sin());
            numeric::sum(nu.points.iter().zip(&nu.weights).map(|(p, w)| w * dir.dot(*p).abs()))
        })
        .fold(f64::INFINITY, f64::min);
    MeasureDiagnostics { mean_norm, directional_spread }
}
