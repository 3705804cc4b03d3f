use nalgebra::{Matrix2, SymmetricEigen};
use serde::Serialize;

use crate::calculus::{qomega_integral_with, IntegrationConfig, RealFunction};
use crate::error::{finite, Error, Result};
use crate::qcore::{QLattice, QOmegaParams};

use super::discrete::DiscreteFunctional;
use super::trajectory::{path_args, LatticeTrajectory, Path};
use super::{Lagrangian, Lagrangian2};

/// Boundary values may miss `α`, `β` by this much before a warning is raised.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

/// Minimize `∫_a^b f(t, y(qt+ω), D y(t)) d_{q,ω}t` subject to `y(a) = α`, `y(b) = β`.
#[derive(Debug, Clone)]
pub struct VariationalProblem {
    pub lagrangian: Lagrangian,
    pub params: QOmegaParams,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl VariationalProblem {
    pub fn new(lagrangian: Lagrangian, params: QOmegaParams, a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval(format!("need a < b, got a = {a}, b = {b}")));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams("boundary values must be finite".into()));
        }
        Ok(Self {
            lagrangian,
            params,
            a,
            b,
            alpha,
            beta,
        })
    }

    /// Same interval and boundary data with another Lagrangian.
    pub fn with_lagrangian(&self, lagrangian: Lagrangian) -> Self {
        Self {
            lagrangian,
            ..self.clone()
        }
    }

    pub fn lattice(&self, depth: usize) -> Result<QLattice> {
        QLattice::build(self.params, self.a, self.b, depth)
    }

    /// Linear interpolant between `(a, α)` and `(b, β)`.
    pub fn linear_interpolant(&self) -> RealFunction {
        let (a, b, alpha, beta) = (self.a, self.b, self.alpha, self.beta);
        let slope = (beta - alpha) / (b - a);
        RealFunction::new("linear interpolant", move |t| alpha + slope * (t - a)).with_derivative(move |_| slope)
    }

    fn boundary_warnings(&self, ya: f64, yb: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        if (ya - self.alpha).abs() > ADMISSIBILITY_TOL {
            warnings.push(format!("y(a) = {ya} differs from alpha = {}", self.alpha));
        }
        if (yb - self.beta).abs() > ADMISSIBILITY_TOL {
            warnings.push(format!("y(b) = {yb} differs from beta = {}", self.beta));
        }
        warnings
    }
}

/// Integral constraint `∫_a^b g(t, y(qt+ω), D y(t)) d_{q,ω}t = k`.
#[derive(Debug, Clone)]
pub struct IsoperimetricConstraint {
    pub g: Lagrangian,
    pub k: f64,
}

/// A candidate `y`: a function of `t` or values on a lattice.
#[derive(Debug, Clone, Copy)]
pub enum Candidate<'a> {
    Function(&'a RealFunction),
    Lattice(&'a LatticeTrajectory),
}

impl<'a> From<&'a RealFunction> for Candidate<'a> {
    fn from(f: &'a RealFunction) -> Self {
        Candidate::Function(f)
    }
}

impl<'a> From<&'a LatticeTrajectory> for Candidate<'a> {
    fn from(y: &'a LatticeTrajectory) -> Self {
        Candidate::Lattice(y)
    }
}

/// Functional value with truncation diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub value: f64,
    /// Number of series terms used (largest over the two endpoints for
    /// functions; regular plus closure terms for lattice values).
    pub truncation_index: usize,
    pub tail_estimate: f64,
    pub warnings: Vec<String>,
}

/// `∫_a^b f(t, y(qt+ω), D y(t)) d_{q,ω}t` for an arbitrary Lagrangian.
///
/// Functions are integrated with the adaptive series. Lattice values use the
/// series terms up to the lattice depth, closed off toward `ω₀` by the
/// quadratic through the last two nodes and `y(ω₀)`.
pub fn functional_of<'a>(
    lagrangian: &Lagrangian,
    params: &QOmegaParams,
    a: f64,
    b: f64,
    y: impl Into<Candidate<'a>>,
    cfg: &IntegrationConfig,
) -> Result<FunctionalValue> {
    match y.into() {
        Candidate::Function(y) => {
            let integrand = |t: f64| {
                let (u, v) = path_args(y, params, t)?;
                finite(lagrangian.eval(t, u, v), lagrangian.label(), t)
            };
            let sum = qomega_integral_with(params, a, b, cfg, integrand)?;
            Ok(FunctionalValue {
                value: sum.value,
                truncation_index: sum.truncation_index(),
                tail_estimate: sum.tail_estimate(),
                warnings: Vec::new(),
            })
        }
        Candidate::Lattice(y) => {
            let signs = seed_signs(y.lattice(), a, b)?;
            let df = DiscreteFunctional::build(y.lattice(), &signs)?;
            let v = df.value(lagrangian, y.values())?;
            let q = params.q();
            Ok(FunctionalValue {
                value: v.value,
                truncation_index: df.regular_terms() + df.tail_terms(),
                tail_estimate: v.last_term.abs() * q / (1.0 - q),
                warnings: Vec::new(),
            })
        }
    }
}

/// `+1` for the branch seeded at `b`, `−1` for the one seeded at `a`.
pub(crate) fn seed_signs(lattice: &QLattice, a: f64, b: f64) -> Result<Vec<f64>> {
    let signs: Vec<f64> = lattice
        .branches()
        .iter()
        .map(|br| {
            if br.seed() == b {
                1.0
            } else if br.seed() == a {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    if !signs.contains(&1.0) || !signs.contains(&-1.0) {
        return Err(Error::InvalidParams(format!(
            "trajectory lattice is not seeded at the problem endpoints {a} and {b}"
        )));
    }
    Ok(signs)
}

/// Value of the problem's functional at `y`; boundary mismatches become warnings.
pub fn evaluate_functional<'a>(
    problem: &VariationalProblem,
    y: impl Into<Candidate<'a>>,
    cfg: &IntegrationConfig,
) -> Result<FunctionalValue> {
    let y = y.into();
    let (ya, yb) = match y {
        Candidate::Function(f) => (f.value(problem.a)?, f.value(problem.b)?),
        Candidate::Lattice(l) => (l.value_at(problem.a)?, l.value_at(problem.b)?),
    };
    let mut out = functional_of(&problem.lagrangian, &problem.params, problem.a, problem.b, y, cfg)?;
    out.warnings = problem.boundary_warnings(ya, yb);
    Ok(out)
}

/// `D_{q,ω}[s ↦ ∂₃f(s, y(qs+ω), D y(s))](t) − ∂₂f(t, y(qt+ω), D y(t))`.
pub fn lagrangian_el_residual<P: Path + ?Sized>(
    lagrangian: &Lagrangian,
    params: &QOmegaParams,
    y: &P,
    t: f64,
) -> Result<f64> {
    let momentum = |s: f64| {
        let (u, v) = path_args(y, params, s)?;
        finite(lagrangian.d3(s, u, v), "partial in v", s)
    };
    let d = y.derivative_of(params, t, &momentum)?;
    let (u, v) = path_args(y, params, t)?;
    finite(d - lagrangian.d2(t, u, v), "Euler-Lagrange residual", t)
}

/// Euler–Lagrange residual of the problem's Lagrangian at `t`.
pub fn el_residual<P: Path + ?Sized>(problem: &VariationalProblem, y: &P, t: f64) -> Result<f64> {
    lagrangian_el_residual(&problem.lagrangian, &problem.params, y, t)
}

/// Euler–Lagrange residual of `F = λ₀f − λg`.
pub fn isoperimetric_residual<P: Path + ?Sized>(
    problem: &VariationalProblem,
    constraint: &IsoperimetricConstraint,
    y: &P,
    lambda: f64,
    lambda0: f64,
    t: f64,
) -> Result<f64> {
    if lambda == 0.0 && lambda0 == 0.0 {
        return Err(Error::BothMultipliersZero);
    }
    let combined = Lagrangian::combine(lambda0, &problem.lagrangian, lambda, &constraint.g);
    lagrangian_el_residual(&combined, &problem.params, y, t)
}

/// `∫_a^b g − k` at `y`.
pub fn constraint_violation<'a>(
    problem: &VariationalProblem,
    constraint: &IsoperimetricConstraint,
    y: impl Into<Candidate<'a>>,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let v = functional_of(&constraint.g, &problem.params, problem.a, problem.b, y, cfg)?;
    Ok(v.value - constraint.k)
}

/// Least-squares multipliers for an isoperimetric candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierFit {
    pub lambda0: f64,
    pub lambda: f64,
    /// `‖λ₀ r_f − λ r_g‖₂` over the sample points.
    pub residual_norm: f64,
    /// `λ/λ₀` when `λ₀` is not negligible (normal case).
    pub ratio: Option<f64>,
    pub f_residual_norm: f64,
    pub g_residual_norm: f64,
}

/// Residuals smaller than this are treated as exact zeros when deciding
/// whether the fit is determined at all.
const DEGENERATE_NORM: f64 = 1e-12;
/// `λ₀` below this is reported as an abnormal fit (no ratio).
const ABNORMAL_LAMBDA0: f64 = 1e-9;

/// Fits `(λ₀, λ)` with `λ₀² + λ² = 1`, `λ₀ ≥ 0`, minimizing
/// `Σ_t (λ₀ r_f(t) − λ r_g(t))²` where `r_f`, `r_g` are the Euler–Lagrange
/// residuals of `f` and `g`.
pub fn estimate_multiplier<P: Path + ?Sized>(
    problem: &VariationalProblem,
    constraint: &IsoperimetricConstraint,
    y: &P,
    t_set: &[f64],
) -> Result<MultiplierFit> {
    if t_set.len() < 2 {
        return Err(Error::InvalidParams("multiplier fit needs at least two points".into()));
    }
    let mut rf = Vec::with_capacity(t_set.len());
    let mut rg = Vec::with_capacity(t_set.len());
    for &t in t_set {
        rf.push(lagrangian_el_residual(&problem.lagrangian, &problem.params, y, t)?);
        rg.push(lagrangian_el_residual(&constraint.g, &problem.params, y, t)?);
    }
    let dot = |x: &[f64], z: &[f64]| x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    let (ff, gg, fg) = (dot(&rf, &rf), dot(&rg, &rg), dot(&rf, &rg));
    let (nf, ng) = (ff.sqrt(), gg.sqrt());
    if nf <= DEGENERATE_NORM && ng <= DEGENERATE_NORM {
        return Err(Error::DegenerateSystem(
            "Euler-Lagrange residuals of f and g both vanish on the sample points".into(),
        ));
    }
    // normalize before the eigen-solve so the two columns are comparable
    let scale = nf.max(ng);
    let gram = Matrix2::new(ff, -fg, -fg, gg) / (scale * scale);
    let eig = SymmetricEigen::new(gram);
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let vec = eig.eigenvectors.column(k);
    let (mut lambda0, mut lambda) = (vec[0], vec[1]);
    let norm = lambda0.hypot(lambda);
    lambda0 /= norm;
    lambda /= norm;
    if lambda0 < 0.0 || (lambda0 == 0.0 && lambda < 0.0) {
        lambda0 = -lambda0;
        lambda = -lambda;
    }
    let residual_norm = rf
        .iter()
        .zip(&rg)
        .map(|(a, b)| (lambda0 * a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(MultiplierFit {
        lambda0,
        lambda,
        residual_norm,
        ratio: (lambda0 > ABNORMAL_LAMBDA0).then(|| lambda / lambda0),
        f_residual_norm: nf,
        g_residual_norm: ng,
    })
}

/// Two unknowns `y₁, y₂` with boundary values at `a` and `b`.
#[derive(Debug, Clone)]
pub struct TwoVariableProblem {
    pub lagrangian: Lagrangian2,
    pub params: QOmegaParams,
    pub a: f64,
    pub b: f64,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

/// Euler–Lagrange residuals of `f − λ̃(t)g` for each unknown, and the
/// constraint value `g(t, y(qt+ω), D y(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonholonomicResidual {
    pub el: [f64; 2],
    pub violation: f64,
}

fn pair_args<P: Path + ?Sized>(y: (&P, &P), params: &QOmegaParams, t: f64) -> Result<([f64; 2], [f64; 2])> {
    let (u1, v1) = path_args(y.0, params, t)?;
    let (u2, v2) = path_args(y.1, params, t)?;
    Ok(([u1, u2], [v1, v2]))
}

/// Residuals of the pointwise-constrained problem `g(t, y(qt+ω), D y(t)) = 0`
/// given a candidate multiplier function `λ̃`.
pub fn nonholonomic_residual<P: Path + ?Sized>(
    problem: &TwoVariableProblem,
    constraint: &Lagrangian2,
    multiplier: &RealFunction,
    y: (&P, &P),
    t: f64,
) -> Result<NonholonomicResidual> {
    let params = &problem.params;
    let f = &problem.lagrangian;
    let augmented_dv = |i: usize, s: f64| -> Result<f64> {
        let (u, v) = pair_args(y, params, s)?;
        let lam = multiplier.value(s)?;
        finite(f.dv(i, s, u, v) - lam * constraint.dv(i, s, u, v), "partial in v", s)
    };
    let (u, v) = pair_args(y, params, t)?;
    let lam = multiplier.value(t)?;
    let mut el = [0.0; 2];
    for (i, slot) in el.iter_mut().enumerate() {
        let d = y.0.derivative_of(params, t, &|s| augmented_dv(i, s))?;
        let du = f.du(i, t, u, v) - lam * constraint.du(i, t, u, v);
        *slot = finite(d - du, "Euler-Lagrange residual", t)?;
    }
    Ok(NonholonomicResidual {
        el,
        violation: finite(constraint.eval(t, u, v), constraint.label(), t)?,
    })
}
