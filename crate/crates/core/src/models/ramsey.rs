//! Quantum Ramsey growth model.
//!
//! Consumption is `C(t) = W(qt+ω)·κ(t) − D W(t)` with the yield coefficient
//! `κ(t) = [r(1 + rδ(t)) − r(1 − 1/q)] / [(1 + rδ(t))(1 − r(t(1−q) − ω))]`,
//! `δ(t) = t − (t−ω)/q`, and the welfare integrand is `E(−p,t)·U[C(t)]`.
//! As `q → 1`, `ω → 0` the coefficient tends to `r`.

use std::fmt;
use std::sync::Arc;

use crate::calculus::{qomega_exp, IntegrationConfig};
use crate::error::{finite, Error, Result};
use crate::qcore::{QLattice, QOmegaParams};
use crate::variational::{Lagrangian, Path};

/// Denominators of `κ` closer to zero than this are singular.
pub const SINGULAR_TOL: f64 = 1e-13;

type Scalar = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Instantaneous utility `U` with its marginal `U′`.
#[derive(Clone)]
pub struct Utility {
    label: String,
    value: Scalar,
    marginal: Scalar,
}

impl Utility {
    pub fn new<U, M>(label: impl Into<String>, value: U, marginal: M) -> Self
    where
        U: Fn(f64) -> Result<f64> + Send + Sync + 'static,
        M: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Arc::new(value),
            marginal: Arc::new(marginal),
        }
    }

    /// `U(c) = ln c`, defined for `c > 0`.
    pub fn log() -> Self {
        fn check(c: f64) -> Result<f64> {
            if c > 0.0 {
                Ok(c)
            } else {
                Err(Error::DomainError {
                    what: "log utility".into(),
                    value: c,
                })
            }
        }
        Self::new("ln(c)", |c| check(c).map(f64::ln), |c| check(c).map(|c| 1.0 / c))
    }

    /// `U(c) = c²/2`.
    pub fn quadratic() -> Self {
        Self::new("c^2/2", |c| Ok(0.5 * c * c), Ok)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "log" => Some(Self::log()),
            "quadratic" => Some(Self::quadratic()),
            _ => None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, c: f64) -> Result<f64> {
        (self.value)(c)
    }

    pub fn marginal(&self, c: f64) -> Result<f64> {
        (self.marginal)(c)
    }
}

impl fmt::Debug for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Utility").field("label", &self.label).finish()
    }
}

/// Model parameters on the horizon `[0, T]`.
#[derive(Debug, Clone)]
pub struct RamseyConfig {
    params: QOmegaParams,
    p: f64,
    r: f64,
    horizon: f64,
    utility: Utility,
    exp_cfg: IntegrationConfig,
}

impl RamseyConfig {
    /// Rejects the configuration if a denominator of `κ` vanishes on
    /// `[0, T]_{q,ω}` at `depth`.
    pub fn new(params: QOmegaParams, p: f64, r: f64, horizon: f64, utility: Utility, depth: usize) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "discount rate must be finite and >= 0, got {p}"
            )));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParams(format!("rate of yield must be finite, got {r}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInterval(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let config = Self {
            params,
            p,
            r,
            horizon,
            utility,
            exp_cfg: IntegrationConfig {
                max_terms: 1_000_000,
                ..IntegrationConfig::default()
            },
        };
        for &t in QLattice::build(params, 0.0, horizon, depth)?.points() {
            config.coefficient(t)?;
        }
        Ok(config)
    }

    /// Overrides the truncation settings of the discount factor.
    pub fn with_exp_config(mut self, cfg: IntegrationConfig) -> Result<Self> {
        cfg.validate()?;
        self.exp_cfg = cfg;
        Ok(self)
    }

    pub fn params(&self) -> &QOmegaParams {
        &self.params
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn utility(&self) -> &Utility {
        &self.utility
    }

    pub fn exp_config(&self) -> &IntegrationConfig {
        &self.exp_cfg
    }

    /// The yield coefficient `κ(t)`.
    pub fn coefficient(&self, t: f64) -> Result<f64> {
        let (q, w, r) = (self.params.q(), self.params.omega(), self.r);
        let delta = t - (t - w) / q;
        let d1 = 1.0 + r * delta;
        let d2 = 1.0 - r * (t * (1.0 - q) - w);
        for den in [d1, d2, d1 * d2] {
            if den.abs() < SINGULAR_TOL {
                return Err(Error::SingularCoefficient { t, denominator: den });
            }
        }
        finite((r * d1 - r * (1.0 - 1.0 / q)) / (d1 * d2), "yield coefficient", t)
    }

    /// `E(−p, t)`; a vanishing factor is an error here.
    pub fn discount(&self, t: f64) -> Result<f64> {
        let e = qomega_exp(&self.params, -self.p, t, &self.exp_cfg)?;
        if e.zero_factor {
            return Err(Error::ExponentialZero { t });
        }
        Ok(e.value)
    }

    /// `E(−p,t)·U[W(qt+ω)κ(t) − v]` as a Lagrangian in `(u, v) = (W(qt+ω), D W(t))`.
    /// Evaluation failures surface as NaN.
    pub fn lagrangian(&self) -> Lagrangian {
        let (c1, c2, c3) = (self.clone(), self.clone(), self.clone());
        Lagrangian::new(
            format!("E(-p,t) U[u k(t) - v], U = {}", self.utility.label()),
            move |t, u, v| c1.weighted(t, u, v, |c| c1.utility.value(c)),
        )
        .with_partials(
            move |t, u, v| {
                let k = c2.coefficient(t).unwrap_or(f64::NAN);
                k * c2.weighted(t, u, v, |c| c2.utility.marginal(c))
            },
            move |t, u, v| -c3.weighted(t, u, v, |c| c3.utility.marginal(c)),
        )
    }

    fn weighted(&self, t: f64, u: f64, v: f64, h: impl Fn(f64) -> Result<f64>) -> f64 {
        let go = || -> Result<f64> { Ok(self.discount(t)? * h(u * self.coefficient(t)? - v)?) };
        go().unwrap_or(f64::NAN)
    }
}

/// `C(t) = W(qt+ω)·κ(t) − D W(t)`.
pub fn ramsey_consumption<P: Path + ?Sized>(config: &RamseyConfig, w: &P, t: f64) -> Result<f64> {
    let params = config.params();
    let k = config.coefficient(t)?;
    let shifted = w.value(params.jump(t))?;
    let dw = w.derivative(params, t)?;
    finite(shifted * k - dw, "consumption", t)
}

/// `E(−p,t)·U′[C(t)]·κ(t) + D[s ↦ E(−p,s)·U′[C(s)]](t)`; zero along a
/// quantum Ramsey extremal. It is the negative of the generic Euler–Lagrange
/// residual of [`RamseyConfig::lagrangian`].
pub fn ramsey_el_residual<P: Path + ?Sized>(config: &RamseyConfig, w: &P, t: f64) -> Result<f64> {
    let marginal_flow = |s: f64| -> Result<f64> {
        let c = ramsey_consumption(config, w, s)?;
        finite(
            config.discount(s)? * config.utility().marginal(c)?,
            "discounted marginal utility",
            s,
        )
    };
    let here = marginal_flow(t)? * config.coefficient(t)?;
    let d = w.derivative_of(config.params(), t, &marginal_flow)?;
    finite(here + d, "Ramsey residual", t)
}
