//! Checks for Leitmann's direct method.
//!
//! Two functionals `L[y] = ∫ f` and `L̄[ȳ] = ∫ f̄` related by `y = z(t, ȳ)` and
//! a gauge term `G` with `f(t, y(qt+ω), D y(t)) − f̄(t, ȳ(qt+ω), D ȳ(t)) =
//! D_{q,ω} G(t, ȳ(t))` differ by the boundary constant
//! `G(b, ȳ(b)) − G(a, ȳ(a))`, so minimizers of one map onto minimizers of the
//! other. Everything here is verified pointwise on lattice points or through
//! the series.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{hahn_derivative_of, qomega_integral_with, IntegrationConfig, RealFunction};
use crate::error::{finite, Error, Result};
use crate::qcore::{QLattice, QOmegaParams};
use crate::variational::{functional_of, path_args, Lagrangian, Path};

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Change of unknown `y = z(t, ȳ)` with inverse `ȳ = z̄(t, y)`.
#[derive(Clone)]
pub struct Transformation {
    forward: Field,
    inverse: Field,
    /// `(∂z/∂t, ∂z/∂ȳ)`, used for the classical derivative at `ω₀`.
    partials: Option<(Field, Field)>,
    label: String,
}

impl Transformation {
    pub fn new<F, G>(label: impl Into<String>, forward: F, inverse: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            partials: None,
            label: label.into(),
        }
    }

    pub fn with_partials<T, Y>(mut self, dt: T, dybar: Y) -> Self
    where
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Y: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.partials = Some((Arc::new(dt), Arc::new(dybar)));
        self
    }

    pub fn identity() -> Self {
        Self::new("identity", |_, w| w, |_, y| y)
    }

    /// `y = ȳ + h(t)`.
    pub fn shift(h: RealFunction) -> Self {
        let (h1, h2, h3) = (h.clone(), h.clone(), h.clone());
        let tr = Self::new(
            format!("ybar + {}", h.label()),
            move |t, w| w + h1.eval(t),
            move |t, y| y - h2.eval(t),
        );
        if h.has_classical_derivative() {
            tr.with_partials(move |t, _| h3.classical_derivative(t).unwrap_or(f64::NAN), |_, _| 1.0)
        } else {
            tr
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn forward(&self, t: f64, ybar: f64) -> f64 {
        (self.forward)(t, ybar)
    }

    pub fn inverse(&self, t: f64, y: f64) -> f64 {
        (self.inverse)(t, y)
    }

    /// `t ↦ z(t, ȳ(t))`, differentiable by the chain rule when both the
    /// partials and `ȳ'` are known.
    pub fn apply(&self, ybar: &RealFunction) -> RealFunction {
        let (tr, yb) = (self.clone(), ybar.clone());
        let y = RealFunction::new(format!("z(t, {})", ybar.label()), move |t| tr.forward(t, yb.eval(t)));
        match &self.partials {
            Some((dt, dy)) if ybar.has_classical_derivative() => {
                let (dt, dy, yb) = (dt.clone(), dy.clone(), ybar.clone());
                y.with_derivative(move |t| {
                    let w = yb.eval(t);
                    dt(t, w) + dy(t, w) * yb.classical_derivative(t).unwrap_or(f64::NAN)
                })
            }
            _ => y,
        }
    }

    /// `t ↦ z̄(t, y(t))`.
    pub fn pull_back(&self, y: &RealFunction) -> RealFunction {
        let (tr, y2) = (self.clone(), y.clone());
        RealFunction::new(format!("zbar(t, {})", y.label()), move |t| tr.inverse(t, y2.eval(t)))
    }

    /// Largest `|z̄(t, z(t, w)) − w|` over `samples` random `w ∈ [−10, 10]` per `t`.
    pub fn inverse_error(&self, t_set: &[f64], samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for &t in t_set {
            for _ in 0..samples {
                let w = rng.gen_range(-10.0..=10.0);
                let back = self.inverse(t, self.forward(t, w));
                worst = worst.max((back - w).abs());
            }
        }
        worst
    }
}

impl fmt::Debug for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformation")
            .field("label", &self.label)
            .field("partials", &self.partials.is_some())
            .finish()
    }
}

/// Gauge term `G(t, ȳ)`.
#[derive(Clone)]
pub struct GaugeTerm {
    g: Field,
    partials: Option<(Field, Field)>,
    label: String,
}

impl GaugeTerm {
    pub fn new<F>(label: impl Into<String>, g: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            g: Arc::new(g),
            partials: None,
            label: label.into(),
        }
    }

    /// `(∂G/∂t, ∂G/∂ȳ)`, used for the classical derivative at `ω₀`.
    pub fn with_partials<T, Y>(mut self, dt: T, dybar: Y) -> Self
    where
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Y: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.partials = Some((Arc::new(dt), Arc::new(dybar)));
        self
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _| 0.0).with_partials(|_, _| 0.0, |_, _| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, ybar: f64) -> f64 {
        (self.g)(t, ybar)
    }
}

impl fmt::Debug for GaugeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeTerm").field("label", &self.label).finish()
    }
}

/// `f(t, y(qt+ω), D y(t)) − f̄(t, ȳ(qt+ω), D ȳ(t)) − D_{q,ω}[s ↦ G(s, ȳ(s))](t)`
/// with `y = z(·, ȳ)`. Zero certifies the gauge identity at `t`.
///
/// At `ω₀` the derivative of the gauge is the chain rule when its partials
/// and `ȳ'` are available, and the orbit limit otherwise.
pub fn verify_gauge_identity(
    params: &QOmegaParams,
    f: &Lagrangian,
    fbar: &Lagrangian,
    transform: &Transformation,
    gauge: &GaugeTerm,
    ybar: &RealFunction,
    t: f64,
) -> Result<f64> {
    let y = transform.apply(ybar);
    let (u, v) = path_args(&y, params, t)?;
    let (ub, vb) = path_args(ybar, params, t)?;
    let chain = match (&gauge.partials, ybar.classical_derivative(t)) {
        (Some((gt, gy)), Some(dy)) if params.is_fixed_point(t) => {
            let w = ybar.value(t)?;
            Some(gt(t, w) + gy(t, w) * dy)
        }
        _ => None,
    };
    let dg = match chain {
        Some(d) => finite(d, gauge.label(), t)?,
        None => hahn_derivative_of(params, t, |s| {
            let w = ybar.value(s)?;
            finite(gauge.eval(s, w), gauge.label(), s)
        })?,
    };
    finite(f.eval(t, u, v) - fbar.eval(t, ub, vb) - dg, "gauge identity", t)
}

/// Functionals of each sample and of its pull-back, and their differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantDifferenceReport {
    pub functionals: Vec<f64>,
    pub transformed: Vec<f64>,
    /// `L[yᵢ] − L̄[ȳᵢ]`.
    pub differences: Vec<f64>,
    pub spread: f64,
    pub passed: bool,
    pub argmin_original: usize,
    pub argmin_transformed: usize,
    pub argmin_agrees: bool,
}

/// Differences must agree to this absolute tolerance.
pub const CONSTANT_DIFFERENCE_TOL: f64 = 1e-8;

/// Evaluates `L[y] − L̄[ȳ]` for admissible samples `y`, with `ȳ = z̄(t, y(t))`.
#[allow(clippy::too_many_arguments)]
pub fn verify_constant_difference(
    params: &QOmegaParams,
    f: &Lagrangian,
    fbar: &Lagrangian,
    transform: &Transformation,
    samples: &[RealFunction],
    a: f64,
    b: f64,
    cfg: &IntegrationConfig,
) -> Result<ConstantDifferenceReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples to compare".into()));
    }
    let mut functionals = Vec::with_capacity(samples.len());
    let mut transformed = Vec::with_capacity(samples.len());
    for y in samples {
        functionals.push(functional_of(f, params, a, b, y, cfg)?.value);
        let ybar = transform.pull_back(y);
        transformed.push(functional_of(fbar, params, a, b, &ybar, cfg)?.value);
    }
    let differences: Vec<f64> = functionals.iter().zip(&transformed).map(|(l, lb)| l - lb).collect();
    let max = differences.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = differences.iter().cloned().fold(f64::INFINITY, f64::min);
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let (argmin_original, argmin_transformed) = (argmin(&functionals), argmin(&transformed));
    Ok(ConstantDifferenceReport {
        spread: max - min,
        passed: max - min <= CONSTANT_DIFFERENCE_TOL,
        argmin_agrees: argmin_original == argmin_transformed,
        functionals,
        transformed,
        differences,
        argmin_original,
        argmin_transformed,
    })
}

/// `base + scale·t(t−a)(t−b)` for each scale; all share the boundary values of `base`.
pub fn probe_family(base: &RealFunction, a: f64, b: f64, scales: &[f64]) -> Vec<RealFunction> {
    scales
        .iter()
        .map(|&c| {
            let base = base.clone();
            RealFunction::new(format!("{} + {c}*t(t-a)(t-b)", base.label()), move |t| {
                base.eval(t) + c * t * (t - a) * (t - b)
            })
        })
        .collect()
}

/// States and controls of the two-state control system
/// `D y₁ = exp(u₁) + u₁ + u₂`, `D y₂ = u₂` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ControlTrajectories {
    pub y1: RealFunction,
    pub y2: RealFunction,
    pub u1: RealFunction,
    pub u2: RealFunction,
}

impl ControlTrajectories {
    /// `y₁ + st`, `y₂ + st`, `u₁`, `u₂ + s`.
    pub fn transformed(&self, s: f64) -> Self {
        let shift_t = RealFunction::polynomial(&[0.0, s]);
        Self {
            y1: self.y1.add(&shift_t),
            y2: self.y2.add(&shift_t),
            u1: self.u1.clone(),
            u2: self.u2.add(&RealFunction::constant(s)),
        }
    }

    /// Inverse of [`transformed`](Self::transformed).
    pub fn mapped_back(&self, s: f64) -> Self {
        self.transformed(-s)
    }

    /// Null controls with `y₁ = t`, `y₂ = 0`: admissible for the `s = −1` problem.
    pub fn null() -> Self {
        Self {
            y1: RealFunction::identity(),
            y2: RealFunction::constant(0.0),
            u1: RealFunction::constant(0.0),
            u2: RealFunction::constant(0.0),
        }
    }
}

/// `∫₀¹ u₁(t)² + u₂(t)² d_{q,ω}t`.
pub fn control_functional(params: &QOmegaParams, traj: &ControlTrajectories, cfg: &IntegrationConfig) -> Result<f64> {
    let sum = qomega_integral_with(params, 0.0, 1.0, cfg, |t| {
        let (a, b) = (traj.u1.value(t)?, traj.u2.value(t)?);
        Ok(a * a + b * b)
    })?;
    Ok(sum.value)
}

/// `[D y₁ − (exp(u₁) + u₁ + u₂), D y₂ − u₂]` at `t`. The system keeps its form
/// under `y^s = y + st`, `u₂^s = u₂ + s`, so the same residual serves every
/// member of the family.
pub fn control_system_residual(params: &QOmegaParams, traj: &ControlTrajectories, t: f64) -> Result<[f64; 2]> {
    let (u1, u2) = (traj.u1.value(t)?, traj.u2.value(t)?);
    let d1 = traj.y1.derivative(params, t)?;
    let d2 = traj.y2.derivative(params, t)?;
    Ok([d1 - (u1.exp() + u1 + u2), d2 - u2])
}

/// Outcome of the invariance checks for the control example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlInvarianceReport {
    pub s: f64,
    pub functional: f64,
    pub transformed_functional: f64,
    /// `L^s[u^s] − L[u]`.
    pub shift: f64,
    /// `s² + 2s`.
    pub expected_shift: f64,
    pub shift_error: f64,
    /// Largest change of the control-system residual under the transformation.
    pub covariance_max: f64,
    /// Largest `|(u₂+s)² − u₂² − D(s²t + 2s y₂)|` on the lattice.
    pub gauge_max: f64,
    /// Functional of the null controls (the `s = −1` problem).
    pub null_functional: f64,
    pub null_system_max: f64,
    /// Boundary mismatch of the null trajectory against `y₁(1) = 1`, `y₂(1) = 0`.
    pub null_boundary_error: f64,
    /// Functional of the null controls mapped back to the original problem.
    pub optimum_functional: f64,
    pub optimum_system_max: f64,
    pub optimum_boundary_error: f64,
    pub passed: bool,
}

/// Tolerances for [`verify_control_invariance`].
pub const SHIFT_TOL: f64 = 1e-8;
pub const COVARIANCE_TOL: f64 = 1e-10;
pub const OPTIMUM_TOL: f64 = 1e-6;

/// Checks the one-parameter family `y^s = y + st`, `u₂^s = u₂ + s` against the
/// control problem on `[0,1]_{q,ω}` at the given lattice depth.
pub fn verify_control_invariance(
    params: &QOmegaParams,
    s: f64,
    traj: &ControlTrajectories,
    depth: usize,
    cfg: &IntegrationConfig,
) -> Result<ControlInvarianceReport> {
    let lattice = QLattice::build(*params, 0.0, 1.0, depth)?;
    for &t in lattice.points() {
        for (name, u) in [("u1", &traj.u1), ("u2", &traj.u2)] {
            let value = u.value(t)?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::ConstraintViolation(format!(
                    "{name}({t}) = {value} lies outside [-1, 1]"
                )));
            }
        }
    }

    let moved = traj.transformed(s);
    let functional = control_functional(params, traj, cfg)?;
    let transformed_functional = control_functional(params, &moved, cfg)?;
    let shift = transformed_functional - functional;
    let expected_shift = s * s + 2.0 * s;

    let gauge = {
        let y2 = traj.y2.clone();
        RealFunction::new("s^2 t + 2 s y2", move |t| s * s * t + 2.0 * s * y2.eval(t))
    };
    let mut covariance_max: f64 = 0.0;
    let mut gauge_max: f64 = 0.0;
    for &t in lattice.points() {
        let r0 = control_system_residual(params, traj, t)?;
        let rs = control_system_residual(params, &moved, t)?;
        covariance_max = covariance_max.max((rs[0] - r0[0]).abs()).max((rs[1] - r0[1]).abs());
        let u2 = traj.u2.value(t)?;
        let dg = gauge.derivative(params, t)?;
        gauge_max = gauge_max.max(((u2 + s).powi(2) - u2 * u2 - dg).abs());
    }

    let null = ControlTrajectories::null();
    let null_functional = control_functional(params, &null, cfg)?;
    let null_system_max = system_max(params, &null, &lattice)?;
    let null_boundary_error = (null.y1.eval(1.0) - 1.0).abs().max(null.y2.eval(1.0).abs());

    let optimum = null.mapped_back(-1.0);
    let optimum_functional = control_functional(params, &optimum, cfg)?;
    let optimum_system_max = system_max(params, &optimum, &lattice)?;
    let optimum_boundary_error = [
        optimum.y1.eval(0.0),
        optimum.y1.eval(1.0) - 2.0,
        optimum.y2.eval(0.0),
        optimum.y2.eval(1.0) - 1.0,
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));

    let shift_error = (shift - expected_shift).abs();
    let passed = shift_error <= SHIFT_TOL
        && covariance_max <= COVARIANCE_TOL
        && null_functional.abs() <= OPTIMUM_TOL
        && null_system_max <= COVARIANCE_TOL
        && null_boundary_error <= COVARIANCE_TOL
        && (optimum_functional - 1.0).abs() <= OPTIMUM_TOL
        && optimum_system_max <= COVARIANCE_TOL
        && optimum_boundary_error <= COVARIANCE_TOL;
    Ok(ControlInvarianceReport {
        s,
        functional,
        transformed_functional,
        shift,
        expected_shift,
        shift_error,
        covariance_max,
        gauge_max,
        null_functional,
        null_system_max,
        null_boundary_error,
        optimum_functional,
        optimum_system_max,
        optimum_boundary_error,
        passed,
    })
}

fn system_max(params: &QOmegaParams, traj: &ControlTrajectories, lattice: &QLattice) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in lattice.points() {
        let r = control_system_residual(params, traj, t)?;
        worst = worst.max(r[0].abs()).max(r[1].abs());
    }
    Ok(worst)
}
