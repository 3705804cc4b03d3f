use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::QLattice;

use super::discrete::DiscreteFunctional;
use super::problem::{seed_signs, VariationalProblem};
use super::trajectory::LatticeTrajectory;

/// Controls for [`solve_direct`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Stop once the max-norm of the Newton step falls below this.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iterations: 200,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

/// Minimizer on the lattice plus convergence data.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub trajectory: LatticeTrajectory,
    pub functional: f64,
    pub iterations: usize,
    /// Max-norm of the last Newton step.
    pub step_norm: f64,
    /// Max-norm of the raw gradient over the free values; at deep nodes it is
    /// dominated by rounding in the difference quotients.
    pub gradient_norm: f64,
}

/// Minimizes the truncated functional over the values of `y` on `[a,b]_{q,ω}`
/// at the given depth, with `y(a) = α`, `y(b) = β` pinned.
///
/// Descent direction: Newton's step with the dense Hessian of the discrete
/// objective (shifted toward the diagonal when it is not positive definite),
/// globalized by Armijo backtracking. Deterministic: the start is the linear
/// interpolant and no randomness is involved.
pub fn solve_direct(problem: &VariationalProblem, depth: usize, opts: &SolveOptions) -> Result<SolveReport> {
    if depth < 3 {
        return Err(Error::InvalidParams(format!(
            "solve_direct needs depth >= 3, got {depth}"
        )));
    }
    if !(opts.grad_tol > 0.0 && opts.armijo > 0.0 && opts.armijo < 1.0 && opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(Error::InvalidParams(format!("invalid solver options {opts:?}")));
    }
    let lattice = problem.lattice(depth)?;
    if lattice.has_shared_points() {
        return Err(shared_orbit(&lattice, problem));
    }
    let signs = seed_signs(&lattice, problem.a, problem.b)?;
    let objective = DiscreteFunctional::build(&lattice, &signs)?;
    let f = &problem.lagrangian;

    let ia = lattice.index_of(problem.a).expect("seed is a lattice point");
    let ib = lattice.index_of(problem.b).expect("seed is a lattice point");
    let slope = (problem.beta - problem.alpha) / (problem.b - problem.a);
    let mut y: Vec<f64> = lattice
        .points()
        .iter()
        .map(|&t| problem.alpha + slope * (t - problem.a))
        .collect();
    y[ia] = problem.alpha;
    y[ib] = problem.beta;
    let free: Vec<usize> = (0..y.len()).filter(|&i| i != ia && i != ib).collect();

    let mut step_norm;
    let mut gradient_norm = f64::INFINITY;
    for iteration in 0..opts.max_iterations {
        let g_full = objective.gradient(f, &y)?;
        let h_full = objective.hessian(f, &y)?;
        let g = DVector::from_iterator(free.len(), free.iter().map(|&i| g_full[i]));
        let h = DMatrix::from_fn(free.len(), free.len(), |r, c| h_full[(free[r], free[c])]);
        gradient_norm = g.amax();

        let (mut d, mut newton) = newton_direction(&h, &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = -g.clone();
            slope = -g.norm_squared();
            newton = false;
        }
        step_norm = d.amax();
        if !newton && gradient_norm < opts.grad_tol {
            // stationary but not a minimum: no descent direction from first-order data
            return Err(Error::MaxIterations {
                iterations: iteration,
                gradient_norm,
            });
        }
        if newton && (step_norm < opts.grad_tol || gradient_norm < opts.grad_tol) {
            return finish(lattice, y, f, &objective, iteration, step_norm, gradient_norm);
        }

        let current = objective.value(f, &y)?;
        let noise = 64.0 * f64::EPSILON * (current.magnitude + 1.0);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let trial = shifted(&y, &free, &d, alpha);
            let value = objective.value(f, &trial)?.value;
            if value <= current.value + opts.armijo * alpha * slope {
                y = trial;
                accepted = true;
                break;
            }
            alpha *= opts.shrink;
        }
        if !accepted {
            // the predicted decrease is below the rounding level of the
            // objective: the Newton step is a pure refinement, take it
            if slope.abs() <= noise {
                y = shifted(&y, &free, &d, 1.0);
            } else {
                return Err(Error::MaxIterations {
                    iterations: iteration + 1,
                    gradient_norm,
                });
            }
        }
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iterations,
        gradient_norm,
    })
}

fn finish(
    lattice: QLattice,
    y: Vec<f64>,
    f: &super::Lagrangian,
    objective: &DiscreteFunctional,
    iterations: usize,
    step_norm: f64,
    gradient_norm: f64,
) -> Result<SolveReport> {
    let functional = objective.value(f, &y)?.value;
    Ok(SolveReport {
        trajectory: LatticeTrajectory::new(lattice, y)?,
        functional,
        iterations,
        step_norm,
        gradient_norm,
    })
}

fn shifted(y: &[f64], free: &[usize], d: &DVector<f64>, alpha: f64) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, &i) in free.iter().enumerate() {
        out[i] += alpha * d[k];
    }
    out
}

/// `−H⁻¹g` after symmetric Jacobi scaling, with a small diagonal shift if the
/// scaled Hessian is only semidefinite. When it is indefinite the scaled
/// steepest-descent direction is returned and the flag is `false`.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = g.len();
    let scale = DVector::from_iterator(
        n,
        h.diagonal()
            .iter()
            .map(|&d| if d > 0.0 && d.is_finite() { 1.0 / d.sqrt() } else { 1.0 }),
    );
    let scaled = DMatrix::from_fn(n, n, |r, c| h[(r, c)] * scale[r] * scale[c]);
    let rhs = -g.component_mul(&scale);
    for shift in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut m = scaled.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(chol) = Cholesky::new(m) {
            let z = chol.solve(&rhs);
            if z.iter().all(|v| v.is_finite()) {
                return (z.component_mul(&scale), true);
            }
        }
    }
    (rhs.component_mul(&scale), false)
}

fn shared_orbit(lattice: &QLattice, problem: &VariationalProblem) -> Error {
    let on_orbit_of_a = lattice.branches()[0].values().contains(&problem.b);
    if on_orbit_of_a {
        Error::SharedOrbit {
            outer: problem.a,
            inner: problem.b,
        }
    } else {
        Error::SharedOrbit {
            outer: problem.b,
            inner: problem.a,
        }
    }
}
