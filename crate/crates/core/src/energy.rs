//! The discrete energy `E(Phi) = sum_i Phi_i nu_i - log T(Phi)` with
//! `T = integral of exp(-Phi*)`, its gradient and Hessian, and the
//! regularized Newton matrix.

use rayon::prelude::*;

use crate::geometry::LaguerreDiagram;
use crate::measure::DiscreteMeasure;
use crate::numeric::{self, Compensated};
use crate::quadrature::{exp_mass_cell, exp_mass_edge};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, Vec2};

/// Energy, gradient and cell masses at one weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    /// `T = sum_i m_i`; may be infinite for extreme weights, see
    /// `log_total_mass`.
    pub total_mass: f64,
    pub log_total_mass: f64,
    /// Cell masses `m_i = integral over Lag_i of exp(-Phi*)`.
    pub cell_masses: Vec<f64>,
    /// `m_i / T`, computed in log space.
    pub probabilities: Vec<f64>,
    /// `nu_i - m_i / T`.
    pub gradient: Vec<f64>,
    /// `-log T`.
    pub i_value: f64,
}

impl EnergyReport {
    /// Euclidean norm of the gradient.
    pub fn gradient_norm(&self) -> f64 {
        numeric::norm(&self.gradient)
    }
}

fn check_complete(diagram: &LaguerreDiagram, n: usize) -> Result<()> {
    if diagram.num_points() != n {
        return Err(Error::InvalidInput(format!(
            "diagram built for {} points, measure has {n}",
            diagram.num_points()
        )));
    }
    match (0..n).find(|&i| diagram.cell(i).is_none()) {
        Some(i) => Err(Error::NotInU(i)),
        None => Ok(()),
    }
}

/// Evaluates the energy and its gradient. Requires every cell to have
/// nonempty interior.
pub fn evaluate(nu: &DiscreteMeasure, phi: &[f64], diagram: &LaguerreDiagram) -> Result<EnergyReport> {
    let n = nu.len();
    check_complete(diagram, n)?;
    let points = nu.points();
    let log_masses: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cell = diagram.cell(i).expect("checked complete");
            exp_mass_cell(cell, points[i], phi[i]).map(|m| m.ln())
        })
        .collect::<Result<_>>()?;
    if let Some(i) = log_masses.iter().position(|m| !m.is_finite()) {
        return Err(Error::InvalidInput(format!("cell {i} has non-finite mass")));
    }

    let log_total_mass = numeric::log_sum_exp(&log_masses);
    let probabilities: Vec<f64> = log_masses.iter().map(|l| (l - log_total_mass).exp()).collect();
    let gradient: Vec<f64> = nu.weights().iter().zip(&probabilities).map(|(w, p)| w - p).collect();
    let mut linear = Compensated::default();
    for (p, w) in phi.iter().zip(nu.weights()) {
        linear.add_product(*p, *w);
    }
    let i_value = -log_total_mass;
    Ok(EnergyReport {
        energy: linear.value() + i_value,
        total_mass: log_total_mass.exp(),
        log_total_mass,
        cell_masses: log_masses.iter().map(|l| l.exp()).collect(),
        probabilities,
        gradient,
        i_value,
    })
}

/// `H = p p^T - diag(p) + L`, stored as the sparse part `L - diag(p)` and
/// the vector `p`.
#[derive(Clone, Debug)]
pub struct HessianMatrix {
    sparse: CsrMatrix,
    /// `p_i = m_i / T`.
    pub rank_one: Vec<f64>,
}

impl HessianMatrix {
    pub fn dim(&self) -> usize {
        self.rank_one.len()
    }

    /// Number of stored entries of the sparse part.
    pub fn nnz(&self) -> usize {
        self.sparse.nnz()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.sparse.get(i, j) + self.rank_one[i] * self.rank_one[j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.sparse.diagonal();
        for (di, p) in d.iter_mut().zip(&self.rank_one) {
            *di += p * p;
        }
        d
    }

    /// `H x` in compensated arithmetic.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.sparse.mul_vec(x, &mut y);
        let px = numeric::dot(&self.rank_one, x);
        for (yi, p) in y.iter_mut().zip(&self.rank_one) {
            let mut acc = Compensated::default();
            acc.add(*yi);
            acc.add_product(*p, px);
            *yi = acc.value();
        }
        y
    }

    /// Upper bound on the infinity norm.
    pub fn norm_bound(&self) -> f64 {
        let p_sum: f64 = self.rank_one.iter().sum();
        let p_max = self.rank_one.iter().copied().fold(0.0, f64::max);
        self.sparse.norm_inf() + p_max * p_sum
    }

    /// Dense copy, for small problems and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }
}

/// Assembles the Hessian from the edge masses of the diagram.
pub fn hessian(
    nu: &DiscreteMeasure,
    phi: &[f64],
    diagram: &LaguerreDiagram,
    report: &EnergyReport,
) -> Result<HessianMatrix> {
    let n = nu.len();
    check_complete(diagram, n)?;
    let points = nu.points();
    let couplings: Vec<(usize, usize, f64)> = diagram
        .edges
        .par_iter()
        .map(|e| {
            let mass = exp_mass_edge(&e.geometry, points[e.i], phi[e.i])?;
            let w = if mass.scaled > 0.0 {
                (mass.ln() - report.log_total_mass).exp() / (points[e.i] - points[e.j]).norm()
            } else {
                0.0
            };
            Ok((e.i, e.j, w))
        })
        .collect::<Result<_>>()?;

    let mut triplets = Vec::with_capacity(4 * couplings.len() + n);
    for (i, &p) in report.probabilities.iter().enumerate() {
        triplets.push((i, i, -p));
    }
    for (i, j, w) in couplings {
        triplets.push((i, j, -w));
        triplets.push((j, i, -w));
        triplets.push((i, i, w));
        triplets.push((j, j, w));
    }
    Ok(HessianMatrix {
        sparse: CsrMatrix::from_triplets(n, triplets),
        rank_one: report.probabilities.clone(),
    })
}

/// Stopping rule for [`RegularizedMatrix::solve`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LinearSolveConfig {
    /// Target for `|M x - b| / |b|`.
    pub tolerance: f64,
    /// Cap on conjugate gradient iterations per refinement round.
    pub max_iterations: usize,
    /// Iterative refinement rounds on the true residual.
    pub max_refinements: usize,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        LinearSolveConfig { tolerance: 1e-12, max_iterations: 20_000, max_refinements: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolve {
    pub solution: Vec<f64>,
    /// Conjugate gradient iterations over all refinement rounds.
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `M = H + u u^T + v_1 v_1^T + v_2 v_2^T` with `u` the all-ones vector and
/// `v_k` the `k`-th coordinates of the support points.
///
/// The span `K` of `u, v_1, v_2` lies in the kernel of `H`, so `M` acts as
/// `U U^T` on `K` and as `H` on its orthogonal complement. Solves use that
/// splitting: the `K` part in closed form, the rest by projected
/// preconditioned conjugate gradients.
#[derive(Clone, Debug)]
pub struct RegularizedMatrix {
    hessian: HessianMatrix,
    basis: [Vec<f64>; 3],
    gram: [[f64; 3]; 3],
    points: Vec<Vec2>,
}

pub fn regularized_matrix(hessian: HessianMatrix, points: &[Vec2]) -> RegularizedMatrix {
    let basis = [
        vec![1.0; points.len()],
        points.iter().map(|p| p.x).collect(),
        points.iter().map(|p| p.y).collect(),
    ];
    let mut gram = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            gram[a][b] = numeric::dot(&basis[a], &basis[b]);
        }
    }
    RegularizedMatrix { hessian, basis, gram, points: points.to_vec() }
}

/// Among `candidates`: the leftmost and rightmost points, plus the point
/// farthest from the line through them.
fn anchor_points(points: &[Vec2], candidates: &[usize]) -> [usize; 3] {
    let by = |f: &dyn Fn(&Vec2) -> f64| {
        candidates
            .iter()
            .copied()
            .max_by(|&a, &b| f(&points[a]).total_cmp(&f(&points[b])))
            .unwrap_or(0)
    };
    let left = by(&|p| -p.x);
    let right = by(&|p| p.x);
    let (a, b) = (points[left], points[right]);
    let far = by(&|p| (b - a).cross(*p - a).abs());
    [left, right, far]
}

impl RegularizedMatrix {
    pub fn dim(&self) -> usize {
        self.hessian.dim()
    }

    pub fn hessian(&self) -> &HessianMatrix {
        &self.hessian
    }

    fn basis_coefficients(&self, x: &[f64]) -> [f64; 3] {
        [0, 1, 2].map(|a| numeric::dot(&self.basis[a], x))
    }

    /// Adds `sum_a c_a basis_a` to `y`.
    fn add_basis(&self, c: [f64; 3], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Compensated::default();
            acc.add(*yi);
            for (a, ca) in c.iter().enumerate() {
                acc.add_product(*ca, self.basis[a][i]);
            }
            *yi = acc.value();
        }
    }

    /// Orthogonal projection onto the complement of `K`.
    fn project(&self, x: &mut [f64]) {
        let c = self.basis_coefficients(x);
        let alpha = numeric::cholesky_solve(self.gram, c).expect("support not on a line");
        self.add_basis(alpha.map(|a| -a), x);
    }

    /// `M x` in compensated arithmetic.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.hessian.mul_vec(x);
        let c = self.basis_coefficients(x);
        self.add_basis(c, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = self.hessian.to_dense();
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += (0..3).map(|a| self.basis[a][i] * self.basis[a][j]).sum::<f64>();
            }
        }
        m
    }

    fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mx = self.mul_vec(x);
        b.iter().zip(mx).map(|(bi, mi)| bi - mi).collect()
    }

    /// Solves `M x = b` to the configured relative residual, or reports a
    /// singular system with the residual reached.
    ///
    /// Each refinement round corrects the `K` component in closed form, the
    /// complement by conjugate gradients, and then removes what is left of
    /// the `K` residual through three entries of `x` only. Spreading that
    /// last correction over all entries would round every `x_i` and, through
    /// the eigenvalue `N` of `u u^T`, leave a residual near `sqrt(N) eps |x|`.
    pub fn solve(&self, b: &[f64], config: &LinearSolveConfig) -> Result<LinearSolve> {
        let n = self.dim();
        let b_norm = numeric::norm(b);
        let mut x = vec![0.0; n];
        if b_norm == 0.0 {
            return Ok(LinearSolve { solution: x, iterations: 0, relative_residual: 0.0 });
        }
        let inv_diag: Vec<f64> = self
            .hessian
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        let cg_target = 0.1 * config.tolerance * b_norm;

        let mut iterations = 0;
        let mut r = b.to_vec();
        let mut rel = 1.0;
        for round in 0..=config.max_refinements {
            if round == 0 {
                // K component: U G^-1 G^-1 U^T r. Later rounds leave it to
                // `polish_gauge`, since this update rounds every entry.
                let c = self.basis_coefficients(&r);
                let alpha = numeric::cholesky_solve(self.gram, c)
                    .and_then(|t| numeric::cholesky_solve(self.gram, t))
                    .ok_or(Error::SingularSystem { residual: rel })?;
                self.add_basis(alpha, &mut x);
            }

            let mut rhs = r.clone();
            self.project(&mut rhs);
            let (correction, its) = self.projected_cg(&rhs, &inv_diag, cg_target, config.max_iterations);
            iterations += its;
            for (xi, ci) in x.iter_mut().zip(&correction) {
                *xi += ci;
            }

            r = self.residual(b, &x);
            self.polish_gauge(&r, &mut x);
            r = self.residual(b, &x);
            rel = numeric::norm(&r) / b_norm;
            if rel <= config.tolerance {
                return Ok(LinearSolve { solution: x, iterations, relative_residual: rel });
            }
        }
        Err(Error::SingularSystem { residual: rel })
    }

    /// Changes three entries of `x` so that `U^T x` absorbs the `K` part
    /// `G^-1 U^T r` of the residual. The entries are taken among the
    /// smallest `|x_j|`, where rounding the update costs least.
    fn polish_gauge(&self, r: &[f64], x: &mut [f64]) {
        let Some(delta) = numeric::cholesky_solve(self.gram, self.basis_coefficients(r)) else {
            return;
        };
        let mut order: Vec<usize> = (0..x.len()).collect();
        let keep = (x.len() / 4).max(3);
        order.select_nth_unstable_by(keep - 1, |&a, &b| x[a].abs().total_cmp(&x[b].abs()));
        order.truncate(keep);
        let anchors = anchor_points(&self.points, &order);
        // Solve A^T d = delta, where row k of A holds the basis entries at
        // anchor k.
        let a: [[f64; 3]; 3] = anchors.map(|j| [0, 1, 2].map(|c| self.basis[c][j]));
        let at = [0, 1, 2].map(|i| [0, 1, 2].map(|k| a[k][i]));
        if let Some(d) = numeric::lu_solve3(at, delta) {
            for (k, &j) in anchors.iter().enumerate() {
                x[j] += d[k];
            }
        }
    }

    /// Preconditioned conjugate gradients for `H x = rhs` on the complement
    /// of `K`, with preconditioner `P D^-1 P`.
    /// Stops once `|r| <= target`, after `max_iterations`, or when the
    /// residual has not improved for a while; returns the best iterate.
    fn projected_cg(
        &self,
        rhs: &[f64],
        inv_diag: &[f64],
        target: f64,
        max_iterations: usize,
    ) -> (Vec<f64>, usize) {
        const PATIENCE: usize = 200;
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        if numeric::norm(&r) <= target {
            return (x, 0);
        }
        let mut best_at = 0;
        let precondition = |r: &[f64]| {
            let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
            self.project(&mut z);
            z
        };
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = numeric::dot(&r, &z);
        let mut best = (numeric::norm(&r), x.clone());
        for k in 0..max_iterations {
            let mut q = self.hessian.mul_vec(&p);
            self.project(&mut q);
            let pq = numeric::dot(&p, &q);
            if !(pq > 0.0) || !(rz > 0.0) {
                return (best.1, k);
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let r_norm = numeric::norm(&r);
            if r_norm < best.0 {
                best = (r_norm, x.clone());
                best_at = k;
            }
            if r_norm <= target {
                return (x, k + 1);
            }
            if k - best_at > PATIENCE {
                return (best.1, k + 1);
            }
            z = precondition(&r);
            let rz_new = numeric::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        (best.1, max_iterations)
    }
}
