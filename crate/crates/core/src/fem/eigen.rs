//! Trace eigenpairs: the smallest `λ` with `Q(u) = λ ∫_∂Ω |u|^p dμ` and
//! `u = 0` on the pinned window nodes.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::{boundary_integral, boundary_integral_gradient, boundary_matrix, EnergyFunctional};
use super::sparse::CsrMatrix;
use crate::measures::{DiscreteBoundaryMeasure, MeasureId};
use crate::windows::Window;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative change in `λ` between iterations.
    pub tol_lambda: f64,
    /// `‖Au − λBu‖ ≤ tol ‖Au‖` for the quadratic problem.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Iteration cap for the descent used when `p > 2`.
    pub max_descent_iter: usize,
    pub seed: u64,
    pub block: usize,
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_lambda: 1e-8,
            tol_residual: 1e-6,
            max_iter: 1000,
            max_descent_iter: 20_000,
            seed: 0,
            block: 4,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_lambda > 0.0 && self.tol_lambda < 1.0) {
            return Err(Error::config("tol_lambda", "must lie in (0, 1)"));
        }
        if !(self.tol_residual > 0.0 && self.tol_residual < 1.0) {
            return Err(Error::config("tol_residual", "must lie in (0, 1)"));
        }
        if self.max_iter == 0 || self.max_descent_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        if self.block == 0 {
            return Err(Error::config("block", "must be positive"));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::config("armijo", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Minimizer `u` (nodal values) with `∫_∂Ω |u|^p dμ = 1` and `λ = Q(u)`.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEigenpair {
    pub lambda: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub p: f64,
    pub measure_id: MeasureId,
    pub iterations: usize,
    pub residual: f64,
}

impl TraceEigenpair {
    #[cfg(test)]
    pub(crate) fn new_for_tests(u: Vec<f64>) -> Self {
        Self { lambda: 0.0, u, p: 2.0, measure_id: MeasureId::Surface, iterations: 0, residual: 0.0 }
    }
}

/// Free-node numbering: `map[i] = Some(j)` for unpinned node `i`.
struct FreeSet {
    map: Vec<Option<usize>>,
    nodes: Vec<usize>,
}

impl FreeSet {
    fn new(pinned: &[bool]) -> Self {
        let mut map = vec![None; pinned.len()];
        let mut nodes = Vec::new();
        for (i, pin) in pinned.iter().enumerate() {
            if !pin {
                map[i] = Some(nodes.len());
                nodes.push(i);
            }
        }
        Self { map, nodes }
    }

    fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&i| u[i]).collect()
    }

    fn scatter(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        for (k, &i) in self.nodes.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }
}

fn factor(a: &CsrMatrix) -> Result<Llt<usize, f64>> {
    // solves are sequential; parallelism lives one level up, across solves
    faer::set_global_parallelism(faer::Par::Seq);
    a.to_faer()?.sp_cholesky(Side::Lower).map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))
}

fn solve_columns(llt: &Llt<usize, f64>, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cols.first().map_or(0, Vec::len);
    let mut rhs = Mat::<f64>::from_fn(n, cols.len(), |i, j| cols[j][i]);
    llt.solve_in_place(rhs.as_mut());
    (0..cols.len()).map(|j| (0..n).map(|i| rhs[(i, j)]).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_inputs(energy: &EnergyFunctional<'_>, window: &Window, measure: &DiscreteBoundaryMeasure) -> Result<()> {
    let ne = energy.mesh.boundary_edges.len();
    if measure.weights.len() != ne {
        return Err(Error::Shape { expected: ne, got: measure.weights.len() });
    }
    if window.fractions.len() != ne {
        return Err(Error::Shape { expected: ne, got: window.fractions.len() });
    }
    Ok(())
}

/// Sign so that the boundary mean is non-negative.
fn orient(mesh_edges: &[crate::geometry::BoundaryEdge], u: &mut [f64]) {
    let mean: f64 = mesh_edges.iter().map(|e| (u[e.nodes[0]] + u[e.nodes[1]]) * e.length).sum();
    if mean < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Quadratic problem `A u = λ B u` by block inverse subspace iteration with
/// Rayleigh–Ritz. The exponent of `energy` is ignored; its `p = 2` matrix is used.
pub fn solve_p2(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    solve_p2_with(energy, window, measure, None, cfg)
}

/// Boundary term `∫ |u|^p dρ` added to the energy; used to relax a window
/// into a penalty during window search.
pub type Robin<'a> = Option<&'a DiscreteBoundaryMeasure>;

pub fn solve_p2_with(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    robin: Robin<'_>,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    cfg.validate()?;
    check_inputs(energy, window, measure)?;
    let mesh = energy.mesh;
    let free = FreeSet::new(&window.pinned_nodes(mesh));
    let nf = free.nodes.len();
    let b_full = boundary_matrix(mesh, measure)?;
    let b = b_full.restrict(&free.map, nf);
    if nf == 0 || b.is_zero() {
        return Err(Error::Infeasible("no boundary measure left outside the window".into()));
    }
    let a = match robin {
        None => energy.quadratic_matrix().restrict(&free.map, nf),
        Some(r) => energy.quadratic_matrix().plus(&boundary_matrix(mesh, r)?).restrict(&free.map, nf),
    };
    let llt = factor(&a)?;

    let bs = cfg.block.min(nf);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<Vec<f64>> = (0..bs)
        .map(|j| if j == 0 { vec![1.0; nf] } else { (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect() })
        .collect();

    let mut lambda_prev = f64::INFINITY;
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let bx: Vec<Vec<f64>> = x.iter().map(|c| b.mul_vec(c)).collect();
        let y = solve_columns(&llt, &bx);
        let ay: Vec<Vec<f64>> = y.iter().map(|c| a.mul_vec(c)).collect();
        let by: Vec<Vec<f64>> = y.iter().map(|c| b.mul_vec(c)).collect();
        let k = y.len();
        let at = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])));
        let bt = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&y[i], &by[j]) + dot(&y[j], &by[i])));
        // A-orthonormal basis of span(Y), dropping numerically dependent directions
        let ea = SymmetricEigen::new(at);
        let smax = ea.eigenvalues.max();
        if !(smax > 0.0) {
            return Err(Error::Solver("subspace collapsed".into()));
        }
        let keep: Vec<usize> = (0..k).filter(|&i| ea.eigenvalues[i] > 1e-13 * smax).collect();
        let basis =
            DMatrix::from_fn(k, keep.len(), |i, j| ea.eigenvectors[(i, keep[j])] / ea.eigenvalues[keep[j]].sqrt());
        let c = basis.transpose() * &bt * &basis;
        let c = 0.5 * (&c + c.transpose());
        let ec = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by(|&i, &j| ec.eigenvalues[j].total_cmp(&ec.eigenvalues[i]));
        let mu0 = ec.eigenvalues[order[0]];
        if !(mu0 > 0.0) {
            return Err(Error::Infeasible("boundary form vanishes on the free space".into()));
        }
        let coef = &basis * ec.eigenvectors.select_columns(&order);
        x = (0..order.len())
            .map(|j| {
                let mut col = vec![0.0; nf];
                for (i, yi) in y.iter().enumerate() {
                    let w = coef[(i, j)];
                    col.iter_mut().zip(yi).for_each(|(c, v)| *c += w * v);
                }
                col
            })
            .collect();
        lambda = 1.0 / mu0;
        let ax0 = a.mul_vec(&x[0]);
        let bx0 = b.mul_vec(&x[0]);
        let r: Vec<f64> = ax0.iter().zip(&bx0).map(|(p, q)| p - lambda * q).collect();
        residual = norm(&r) / norm(&ax0);
        let change = (lambda - lambda_prev).abs() / lambda;
        lambda_prev = lambda;
        if change <= cfg.tol_lambda && residual <= cfg.tol_residual {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Solver(format!(
            "subspace iteration did not converge in {iterations} iterations (λ = {lambda}, residual {residual:.3e})"
        )));
    }
    let scale = 1.0 / b.quad_form(&x[0]).sqrt();
    let xs: Vec<f64> = x[0].iter().map(|v| v * scale).collect();
    let mut u = free.scatter(&xs, mesh.num_nodes());
    orient(&mesh.boundary_edges, &mut u);
    let lambda = a.quad_form(&xs);
    Ok(TraceEigenpair { lambda, u, p: 2.0, measure_id: measure.id, iterations, residual })
}

/// `R(u) = Q(u) / ∫_∂Ω |u|^p dμ`.
pub fn rayleigh_quotient(energy: &EnergyFunctional<'_>, measure: &DiscreteBoundaryMeasure, u: &[f64]) -> Result<f64> {
    quotient_with(energy, measure, None, u)
}

fn numerator(energy: &EnergyFunctional<'_>, robin: Robin<'_>, u: &[f64]) -> Result<f64> {
    let q = energy.energy(u)?;
    Ok(match robin {
        None => q,
        Some(r) => q + boundary_integral(energy.mesh, energy.p, u, r)?,
    })
}

fn quotient_with(
    energy: &EnergyFunctional<'_>,
    measure: &DiscreteBoundaryMeasure,
    robin: Robin<'_>,
    u: &[f64],
) -> Result<f64> {
    let den = boundary_integral(energy.mesh, energy.p, u, measure)?;
    if den <= 0.0 {
        return Err(Error::Infeasible("boundary integral vanishes".into()));
    }
    Ok(numerator(energy, robin, u)? / den)
}

/// `∇R = (∇Q − R ∇N) / N`.
pub fn rayleigh_gradient(
    energy: &EnergyFunctional<'_>,
    measure: &DiscreteBoundaryMeasure,
    u: &[f64],
) -> Result<Vec<f64>> {
    gradient_with(energy, measure, None, u)
}

fn gradient_with(
    energy: &EnergyFunctional<'_>,
    measure: &DiscreteBoundaryMeasure,
    robin: Robin<'_>,
    u: &[f64],
) -> Result<Vec<f64>> {
    let den = boundary_integral(energy.mesh, energy.p, u, measure)?;
    if den <= 0.0 {
        return Err(Error::Infeasible("boundary integral vanishes".into()));
    }
    let r = numerator(energy, robin, u)? / den;
    let mut gq = energy.energy_gradient(u)?;
    if let Some(rb) = robin {
        let g = boundary_integral_gradient(energy.mesh, energy.p, u, rb)?;
        gq.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let gn = boundary_integral_gradient(energy.mesh, energy.p, u, measure)?;
    Ok(gq.iter().zip(&gn).map(|(q, n)| (q - r * n) / den).collect())
}

/// General `p ≥ 2`: preconditioned steepest descent on the Rayleigh
/// quotient, started from the quadratic eigenfunction. The preconditioner is
/// the `p = 2` stiffness matrix restricted to the free nodes.
pub fn solve_p_general(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    solve_p_general_with(energy, window, measure, None, cfg)
}

pub fn solve_p_general_with(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    robin: Robin<'_>,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    let quad = energy.with_exponent(2.0)?;
    let start = solve_p2_with(&quad, window, measure, robin, cfg)?;
    let p = energy.p;
    let mesh = energy.mesh;
    let normalize = |u: &mut Vec<f64>| -> Result<()> {
        let n = boundary_integral(mesh, p, u, measure)?;
        if n <= 0.0 {
            return Err(Error::Infeasible("boundary integral vanishes".into()));
        }
        let s = n.powf(-1.0 / p);
        u.iter_mut().for_each(|v| *v *= s);
        Ok(())
    };
    let mut u = start.u.clone();
    normalize(&mut u)?;
    let free = FreeSet::new(&window.pinned_nodes(mesh));
    let nf = free.nodes.len();
    let llt = factor(&quad.quadratic_matrix().restrict(&free.map, nf))?;

    let mut r = quotient_with(energy, measure, robin, &u)?;
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let mut quiet = 0;
    while iterations < cfg.max_descent_iter {
        iterations += 1;
        let g = free.gather(&gradient_with(energy, measure, robin, &u)?);
        let d = solve_columns(&llt, std::slice::from_ref(&g)).pop().unwrap();
        let slope = -dot(&g, &d);
        gnorm = (-slope).max(0.0).sqrt();
        if gnorm <= 1e-14 * r.max(1.0) {
            break;
        }
        let dir = free.scatter(&d, mesh.num_nodes());
        let mut t = (2.0 * step).min(1e6);
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - t * b).collect();
            if normalize(&mut trial).is_ok() {
                let rt = quotient_with(energy, measure, robin, &trial)?;
                if rt <= r + cfg.armijo * t * slope {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, rt)) = accepted else { break };
        let change = (r - rt).abs() / r;
        u = trial;
        r = rt;
        step = t;
        // a few consecutive small changes guard against stalls in a narrow valley
        quiet = if change <= cfg.tol_lambda { quiet + 1 } else { 0 };
        if quiet >= 3 {
            break;
        }
    }
    if iterations >= cfg.max_descent_iter {
        return Err(Error::Solver(format!("descent did not converge in {iterations} iterations (λ = {r})")));
    }
    orient(&mesh.boundary_edges, &mut u);
    Ok(TraceEigenpair {
        lambda: numerator(energy, robin, &u)?,
        u,
        p,
        measure_id: measure.id,
        iterations,
        residual: gnorm,
    })
}

/// [`solve_p2`] when `p = 2`, [`solve_p_general`] otherwise.
pub fn solve(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    solve_with(energy, window, measure, None, cfg)
}

pub fn solve_with(
    energy: &EnergyFunctional<'_>,
    window: &Window,
    measure: &DiscreteBoundaryMeasure,
    robin: Robin<'_>,
    cfg: &SolverConfig,
) -> Result<TraceEigenpair> {
    if energy.p == 2.0 {
        solve_p2_with(energy, window, measure, robin, cfg)
    } else {
        solve_p_general_with(energy, window, measure, robin, cfg)
    }
}
