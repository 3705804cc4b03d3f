use thiserror::Error;

/// Errors raised by the calculus, the variational layer and the models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("both seeds {a} and {b} collapse onto the fixed point")]
    DegenerateSeed { a: f64, b: f64 },

    #[error("derivative at the fixed point {omega0} is unavailable: {reason}")]
    DerivativeAtFixedPointUnavailable { omega0: f64, reason: String },

    #[error("operation is undefined at the fixed point {omega0}")]
    FixedPointInput { omega0: f64 },

    #[error("series did not converge after {terms} terms (last term {last_term:e})")]
    SeriesNotConverged { terms: usize, last_term: f64 },

    #[error("infinite product did not converge after {factors} factors")]
    NonConvergence { factors: usize },

    #[error("non-finite value from {what} at t = {t}")]
    NonFinite { what: String, t: f64 },

    #[error("{t} is not a point of the lattice")]
    NotALatticePoint { t: f64 },

    #[error("jump of {t} lies beyond the lattice depth")]
    MissingNeighbor { t: f64 },

    #[error("descent stalled after {iterations} iterations (gradient norm {gradient_norm:e})")]
    MaxIterations { iterations: usize, gradient_norm: f64 },

    #[error("seed {inner} lies on the orbit of seed {outer}; the functional does not determine the trajectory past the inner endpoint")]
    SharedOrbit { outer: f64, inner: f64 },

    #[error("multipliers lambda0 and lambda are both zero")]
    BothMultipliersZero,

    #[error("degenerate multiplier system: {0}")]
    DegenerateSystem(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("singular coefficient at t = {t} (denominator {denominator:e})")]
    SingularCoefficient { t: f64, denominator: f64 },

    #[error("q,omega-exponential vanishes at t = {t}")]
    ExponentialZero { t: f64 },

    #[error("argument {value} outside the domain of {what}")]
    DomainError { what: String, value: f64 },

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
}

impl Error {
    /// `true` for failures of the numerics (non-convergence, singularities),
    /// `false` for invalid input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidInterval(_)
                | Error::DegenerateSeed { .. }
                | Error::UnknownFixture(_)
                | Error::BothMultipliersZero
                | Error::NotALatticePoint { .. }
                | Error::FixedPointInput { .. }
                | Error::ConstraintViolation(_)
                | Error::SharedOrbit { .. }
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidInterval(_) => "InvalidInterval",
            Error::DegenerateSeed { .. } => "DegenerateSeed",
            Error::DerivativeAtFixedPointUnavailable { .. } => "DerivativeAtFixedPointUnavailable",
            Error::FixedPointInput { .. } => "FixedPointInput",
            Error::SeriesNotConverged { .. } => "SeriesNotConverged",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotALatticePoint { .. } => "NotALatticePoint",
            Error::MissingNeighbor { .. } => "MissingNeighbor",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::SharedOrbit { .. } => "SharedOrbit",
            Error::BothMultipliersZero => "BothMultipliersZero",
            Error::DegenerateSystem(_) => "DegenerateSystem",
            Error::UnknownFixture(_) => "UnknownFixture",
            Error::SingularCoefficient { .. } => "SingularCoefficient",
            Error::ExponentialZero { .. } => "ExponentialZero",
            Error::DomainError { .. } => "DomainError",
            Error::ConstraintViolation(_) => "ConstraintViolation",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn finite(value: f64, what: &str, t: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: what.to_string(),
            t,
        })
    }
}
