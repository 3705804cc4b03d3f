//! Worked examples and the quantum Ramsey model.

mod fixtures;
mod ramsey;

pub use fixtures::{
    example1, example2, example3_control, example4, example4_coefficients, fixture, gauge_expansion_residual,
    weighted_square_lagrangian, ControlFixture, Fixture, LeitmannSetup, VariationalFixture, FIXTURE_NAMES,
};
pub use ramsey::{ramsey_consumption, ramsey_el_residual, RamseyConfig, Utility, SINGULAR_TOL};
