//! Variational problems over q,ω-lattices: functionals, Euler–Lagrange
//! residuals, a direct minimizer, isoperimetric multipliers and a sampled
//! convexity check.

mod convexity;
mod discrete;
mod lagrangian;
mod problem;
mod solve;
mod trajectory;

pub use convexity::{check_joint_convexity, ConvexityReport};
pub use lagrangian::{Lagrangian, Lagrangian2};
pub use problem::{
    constraint_violation, el_residual, estimate_multiplier, evaluate_functional, functional_of, isoperimetric_residual,
    lagrangian_el_residual, nonholonomic_residual, Candidate, FunctionalValue, IsoperimetricConstraint, MultiplierFit,
    NonholonomicResidual, TwoVariableProblem, VariationalProblem, ADMISSIBILITY_TOL,
};
pub use solve::{solve_direct, SolveOptions, SolveReport};
pub use trajectory::{path_args, LatticeTrajectory, Path};
