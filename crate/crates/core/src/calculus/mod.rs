//! Hahn difference operator, Jackson–Nörlund integral and the q,ω-exponential.

mod derivative;
mod exponential;
pub mod function;
mod integral;

pub use derivative::{fixed_point_limit, hahn_derivative, hahn_derivative_of, hahn_quotient, power_rule};
pub use exponential::{qomega_exp, ExpOutcome};
pub use function::{builtins, Polynomial, RealFunction};
pub use integral::{
    integral_from_omega0, integral_from_omega0_with, qomega_integral, qomega_integral_with, CompensatedSum,
    IntegralSum, IntegrationConfig, SeriesSum,
};
