//! Hahn quantum difference calculus.
//!
//! The operator `D_{q,ω} f(t) = (f(qt+ω) − f(t)) / ((qt+ω) − t)`, its inverse the
//! Jackson–Nörlund integral, the q,ω-exponential, and a variational layer built
//! on top of them: Euler–Lagrange residuals, a direct minimizer on truncated
//! lattices, isoperimetric multipliers, Leitmann gauge checks and a discrete
//! Ramsey growth model.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod leitmann;
pub mod models;
pub mod qcore;
pub mod variational;

pub use calculus::{
    hahn_derivative, integral_from_omega0, power_rule, qomega_exp, qomega_integral, IntegrationConfig, Polynomial,
    RealFunction,
};
pub use error::{Error, Result};
pub use qcore::{QLattice, QOmegaParams};
