//! Damped Newton iteration for the discrete energy, with steps halved until
//! every Laguerre cell keeps a nonempty interior.

use crate::energy::{self, LinearSolveConfig};
use crate::geometry::{self, WeightVector};
use crate::measure::DiscreteMeasure;
use crate::{Error, Result, Vec2};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop when `|grad E| <= tolerance * |nu|` (Euclidean norms).
    pub tolerance: f64,
    pub max_newton_iterations: usize,
    /// Largest `i` tried for the step `2^-i`.
    pub max_damping_bisections: u32,
    pub linear: LinearSolveConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_newton_iterations: 100,
            max_damping_bisections: 60,
            linear: LinearSolveConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tolerance > 0.0
            && self.max_newton_iterations > 0
            && self.linear.tolerance > 0.0
            && self.linear.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid solver configuration {self:?}")))
        }
    }
}

/// One Newton iteration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IterationInfo {
    pub k: usize,
    /// `|grad E(Phi_k)| / |nu|`.
    pub residual: f64,
    /// Accepted step `2^-i`; `None` on the final, converged row.
    pub tau: Option<f64>,
    pub linear_iterations: usize,
    pub linear_residual: f64,
}

impl IterationInfo {
    /// Whether the step was shortened.
    pub fn damped(&self) -> bool {
        self.tau.is_some_and(|t| t != 1.0)
    }
}

/// Every iterate of a solve; the last entry is the converged one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub iterations: Vec<IterationInfo>,
}

impl SolveTrace {
    /// Number of Newton steps taken.
    pub fn newton_steps(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |it| it.residual)
    }

    /// Indices of iterations whose step was damped.
    pub fn damped_iterations(&self) -> Vec<usize> {
        self.iterations.iter().filter(|it| it.damped()).map(|it| it.k).collect()
    }
}

/// The normalized convex potential `psi = Phi* + log T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    points: Vec<Vec2>,
    phi: WeightVector,
    /// `c = log integral of exp(-Phi*)`.
    pub normalization: f64,
}

impl Potential {
    pub fn new(points: Vec<Vec2>, phi: WeightVector, normalization: f64) -> Self {
        Potential { points, phi, normalization }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn phi(&self) -> &WeightVector {
        &self.phi
    }

    pub fn evaluate(&self, x: Vec2) -> f64 {
        geometry::eval_phi_star(&self.points, &self.phi, x) + self.normalization
    }
}

/// `Phi_i = |y_i|^2 / 2`, whose Laguerre diagram is the Voronoi diagram.
pub fn initial_guess(nu: &DiscreteMeasure) -> WeightVector {
    WeightVector::new(nu.points().iter().map(|y| 0.5 * y.norm_squared()).collect())
        .expect("finite points give finite weights")
}

pub fn solve(nu: &DiscreteMeasure, config: &SolverConfig) -> Result<(Potential, SolveTrace)> {
    solve_from(nu, initial_guess(nu), config)
}

/// Runs the iteration from `phi0`, which must have all cells nonempty.
pub fn solve_from(
    nu: &DiscreteMeasure,
    phi0: WeightVector,
    config: &SolverConfig,
) -> Result<(Potential, SolveTrace)> {
    config.validate()?;
    let points = nu.points();
    if phi0.len() != nu.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} points",
            phi0.len(),
            nu.len()
        )));
    }
    let nu_norm = nu.weight_norm();
    let mut phi = phi0.into_inner();
    let mut trace = SolveTrace::default();

    for k in 0.. {
        let diagram = geometry::build_diagram(points, &phi)?;
        if let Some(i) = (0..nu.len()).find(|&i| diagram.cell(i).is_none()) {
            return Err(Error::NotInU(i));
        }
        let report = energy::evaluate(nu, &phi, &diagram)?;
        let residual = report.gradient_norm() / nu_norm;
        if residual <= config.tolerance {
            trace.iterations.push(IterationInfo {
                k,
                residual,
                tau: None,
                linear_iterations: 0,
                linear_residual: 0.0,
            });
            let phi = WeightVector::new(phi)?;
            return Ok((Potential::new(points.to_vec(), phi, report.log_total_mass), trace));
        }
        if k >= config.max_newton_iterations {
            return Err(Error::MaxIterationsExceeded { iterations: k, residual });
        }

        let hessian = energy::hessian(nu, &phi, &diagram, &report)?;
        let matrix = energy::regularized_matrix(hessian, points);
        let rhs: Vec<f64> = report.gradient.iter().map(|g| -g).collect();
        let step = matrix.solve(&rhs, &config.linear)?;

        let mut accepted = None;
        for i in 0..=config.max_damping_bisections {
            let tau = 0.5f64.powi(i as i32);
            let candidate: Vec<f64> =
                phi.iter().zip(&step.solution).map(|(p, d)| p + tau * d).collect();
            if candidate.iter().all(|v| v.is_finite()) && geometry::in_u(points, &candidate)? {
                accepted = Some((tau, candidate));
                break;
            }
        }
        let (tau, next) = accepted.ok_or(Error::DampingFailed { iteration: k })?;
        trace.iterations.push(IterationInfo {
            k,
            residual,
            tau: Some(tau),
            linear_iterations: step.iterations,
            linear_residual: step.relative_residual,
        });
        phi = next;
    }
    unreachable!("the loop returns")
}
