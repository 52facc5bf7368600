//! Post-processing: affine alignment against a known solution, error norms
//! and log-log rate fits.

use crate::geometry::{build_diagram, lower_envelope, EdgeGeometry};
use crate::measure::{DiscreteMeasure, ExactSolution};
use crate::numeric::{self, Compensated};
use crate::solver::Potential;
use crate::{Error, Result, Vec2};

/// A convex potential `psi` together with its Legendre transform `phi`.
pub trait ReferenceSolution {
    fn psi(&self, x: Vec2) -> f64;
    fn phi(&self, y: Vec2) -> f64;
    /// Diameter of the domain of `phi`, used to place far-field probes.
    fn support_diameter(&self) -> f64;
}

impl ReferenceSolution for ExactSolution {
    fn psi(&self, x: Vec2) -> f64 {
        ExactSolution::psi(*self, x)
    }

    fn phi(&self, y: Vec2) -> f64 {
        ExactSolution::phi(*self, y)
    }

    fn support_diameter(&self) -> f64 {
        ExactSolution::support_diameter(*self)
    }
}

/// Affine gauge `phi -> phi + a + <v, y>`, equivalently
/// `psi(x) -> psi(x - v) - a`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Alignment {
    pub a: f64,
    pub v: Vec2,
}

impl Alignment {
    pub const IDENTITY: Alignment = Alignment { a: 0.0, v: Vec2::ZERO };

    pub fn apply(&self, y: Vec2, value: f64) -> f64 {
        value + self.a + self.v.dot(y)
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub l_inf: f64,
    pub l2_nu: f64,
    pub l1_nu: f64,
    /// Set when a far point on an unbounded diagram ray gave a larger
    /// `psi` error than every diagram vertex. Never expected; reported only.
    pub ray_exceeds_vertices: bool,
}

/// `phi_nu(y_i) = Phi**(y_i) - c` for a computed potential.
pub fn discrete_phi(solved: &Potential) -> Result<Vec<f64>> {
    let env = lower_envelope(solved.points(), solved.phi())?;
    Ok(env.values.iter().map(|v| v - solved.normalization).collect())
}

/// Weighted least-squares fit of `reference - values` by `a + <v, y>`.
pub fn fit_alignment(nu: &DiscreteMeasure, reference: &[f64], values: &[f64]) -> Result<Alignment> {
    if reference.len() != nu.len() || values.len() != nu.len() {
        return Err(Error::InvalidInput("value count does not match the measure".into()));
    }
    let mut normal = [[Compensated::default(); 3]; 3];
    let mut rhs = [Compensated::default(); 3];
    for ((y, w), (r, v)) in nu.points().iter().zip(nu.weights()).zip(reference.iter().zip(values)) {
        let u = [1.0, y.x, y.y];
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j].add_product(w * u[i], u[j]);
            }
            rhs[i].add_product(w * u[i], r - v);
        }
    }
    let a = normal.map(|row| row.map(Compensated::value));
    let b = rhs.map(Compensated::value);
    let x = numeric::cholesky_solve(a, b)
        .ok_or_else(|| Error::InvalidMeasure("singular alignment normal matrix".into()))?;
    Ok(Alignment { a: x[0], v: Vec2::new(x[1], x[2]) })
}

/// Fits the alignment of `solved` to `exact` and returns it together with the
/// aligned discrete values at the support points.
pub fn align(
    exact: &impl ReferenceSolution,
    nu: &DiscreteMeasure,
    solved: &Potential,
) -> Result<(Alignment, Vec<f64>)> {
    let values = discrete_phi(solved)?;
    let reference: Vec<f64> = nu.points().iter().map(|y| exact.phi(*y)).collect();
    let alignment = fit_alignment(nu, &reference, &values)?;
    let aligned = nu
        .points()
        .iter()
        .zip(&values)
        .map(|(y, v)| alignment.apply(*y, *v))
        .collect();
    Ok((alignment, aligned))
}

/// Sup, L2(nu) and L1(nu) distances between `exact` and the aligned solution.
///
/// The sup norm uses the two one-sided maxima of the Legendre isometry: the
/// `psi` side is sampled at diagram vertices and the `phi` side at the support
/// points, where each piecewise maximum is attained.
pub fn error_norms(
    exact: &impl ReferenceSolution,
    nu: &DiscreteMeasure,
    solved: &Potential,
    alignment: &Alignment,
) -> Result<ErrorReport> {
    let values = discrete_phi(solved)?;
    let diffs: Vec<f64> = nu
        .points()
        .iter()
        .zip(&values)
        .map(|(y, v)| exact.phi(*y) - alignment.apply(*y, *v))
        .collect();
    let l2_nu = numeric::sum(diffs.iter().zip(nu.weights()).map(|(d, w)| w * d * d)).sqrt();
    let l1_nu = numeric::sum(diffs.iter().zip(nu.weights()).map(|(d, w)| w * d.abs()));
    let phi_side = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // psi_aligned(x + v) = psi_nu(x) - a
    let psi_gap = |x: Vec2| exact.psi(x + alignment.v) - (solved.evaluate(x) - alignment.a);
    let diagram = build_diagram(solved.points(), solved.phi())?;
    let psi_side = diagram.vertices.iter().map(|x| psi_gap(*x)).fold(f64::NEG_INFINITY, f64::max);
    let far = 5.0 * exact.support_diameter();
    let ray_side = diagram
        .edges
        .iter()
        .filter_map(|e| match e.geometry {
            EdgeGeometry::Ray { origin, direction } => {
                Some(psi_gap(origin + direction * (far / direction.norm())))
            }
            EdgeGeometry::Segment { .. } => None,
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(ErrorReport {
        l_inf: phi_side.max(psi_side).max(0.0),
        l2_nu,
        l1_nu,
        ray_exceeds_vertices: ray_side > psi_side.max(phi_side),
    })
}

/// Least-squares slope of `log(error)` against `log(N)`.
pub fn fit_rate(samples: &[(usize, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 samples, got {}", samples.len())));
    }
    for &(n, e) in samples {
        if n == 0 || !(e > 0.0 && e.is_finite()) {
            return Err(Error::DegenerateFit(format!("invalid sample (N = {n}, error = {e})")));
        }
    }
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = numeric::sum(xs.iter().copied()) / k;
    let my = numeric::sum(ys.iter().copied()) / k;
    let sxx = numeric::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("need at least 2 distinct N".into()));
    }
    let sxy = numeric::sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    Ok(sxy / sxx)
}
