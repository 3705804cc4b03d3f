//! Jackson–Nörlund integral.
//!
//! `∫_{ω₀}^x f d_{q,ω}t = (x(1−q) − ω) Σ_k qᵏ f(xqᵏ + [k]_{q,ω})` and
//! `∫_a^b = ∫_{ω₀}^b − ∫_{ω₀}^a`. The series is summed in ascending `k` with
//! compensated summation and cut off adaptively.

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::qcore::QOmegaParams;

use super::RealFunction;

/// Truncation controls for series and products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_terms < 1 {
            return Err(Error::InvalidParams(format!(
                "integration config needs rel_tol > 0, abs_tol > 0, max_terms >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Series terms are only allowed to stop the sum from this index on.
const MIN_TERMS: usize = 8;
/// Number of consecutive small terms required to stop.
const QUIET_RUN: usize = 3;

/// Neumaier's variant of compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Value of a truncated series plus truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    /// Index of the last term included.
    pub truncation_index: usize,
    /// Geometric estimate of the neglected tail.
    pub tail_estimate: f64,
}

impl SeriesSum {
    fn exact_zero() -> Self {
        Self {
            value: 0.0,
            truncation_index: 0,
            tail_estimate: 0.0,
        }
    }
}

/// `∫_{ω₀}^x g d_{q,ω}t` for a fallible integrand.
///
/// Stops at the first `K ≥ 8` where three consecutive contributions satisfy
/// `|termₖ| < abs_tol + rel_tol·|partial sum|`.
pub fn integral_from_omega0_with<F>(params: &QOmegaParams, x: f64, cfg: &IntegrationConfig, g: F) -> Result<SeriesSum>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let prefactor = x * (1.0 - params.q()) - params.omega();
    if params.is_fixed_point(x) || prefactor == 0.0 {
        return Ok(SeriesSum::exact_zero());
    }

    let mut acc = CompensatedSum::new();
    let mut node = x;
    let mut weight = prefactor;
    let mut quiet = 0usize;
    let mut last = 0.0;
    for k in 0..cfg.max_terms {
        let value = g(node)?;
        let term = finite(weight * value, "integrand", node)?;
        acc.add(term);
        last = term;
        let partial = acc.value();
        if term.abs() < cfg.abs_tol + cfg.rel_tol * partial.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if k + 1 >= MIN_TERMS && quiet >= QUIET_RUN {
            let q = params.q();
            return Ok(SeriesSum {
                value: partial,
                truncation_index: k,
                tail_estimate: term.abs() * q / (1.0 - q),
            });
        }
        weight *= params.q();
        node = params.q() * node + params.omega();
    }
    Err(Error::SeriesNotConverged {
        terms: cfg.max_terms,
        last_term: last,
    })
}

/// `∫_{ω₀}^x f d_{q,ω}t`.
pub fn integral_from_omega0(params: &QOmegaParams, f: &RealFunction, x: f64, cfg: &IntegrationConfig) -> Result<f64> {
    integral_from_omega0_with(params, x, cfg, |t| finite(f.eval(t), f.label(), t)).map(|s| s.value)
}

/// Result of `∫_a^b` with the two anchored series it is made of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralSum {
    pub value: f64,
    pub upper: SeriesSum,
    pub lower: SeriesSum,
}

impl IntegralSum {
    pub fn truncation_index(&self) -> usize {
        self.upper.truncation_index.max(self.lower.truncation_index)
    }

    pub fn tail_estimate(&self) -> f64 {
        self.upper.tail_estimate + self.lower.tail_estimate
    }
}

/// `∫_a^b g d_{q,ω}t` for a fallible integrand.
pub fn qomega_integral_with<F>(
    params: &QOmegaParams,
    a: f64,
    b: f64,
    cfg: &IntegrationConfig,
    g: F,
) -> Result<IntegralSum>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        cfg.validate()?;
        return Ok(IntegralSum {
            value: 0.0,
            upper: SeriesSum::exact_zero(),
            lower: SeriesSum::exact_zero(),
        });
    }
    let upper = integral_from_omega0_with(params, b, cfg, &g)?;
    let lower = integral_from_omega0_with(params, a, cfg, &g)?;
    Ok(IntegralSum {
        value: upper.value - lower.value,
        upper,
        lower,
    })
}

/// `∫_a^b f d_{q,ω}t`.
pub fn qomega_integral(
    params: &QOmegaParams,
    f: &RealFunction,
    a: f64,
    b: f64,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    qomega_integral_with(params, a, b, cfg, |t| finite(f.eval(t), f.label(), t)).map(|s| s.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::hahn_derivative;

    fn params(q: f64, w: f64) -> QOmegaParams {
        QOmegaParams::new(q, w).unwrap()
    }

    /// Plain partial sum with closed-form nodes, independent of the adaptive path.
    fn brute_force(p: &QOmegaParams, f: impl Fn(f64) -> f64, x: f64, terms: usize) -> f64 {
        let (q, w) = (p.q(), p.omega());
        let mut s = 0.0;
        for k in 0..terms {
            let qk = q.powi(k as i32);
            s += qk * f(x * qk + w * (1.0 - qk) / (1.0 - q));
        }
        (x * (1.0 - q) - w) * s
    }

    #[test]
    fn vanishes_at_fixed_point() {
        let p = params(0.5, 0.25);
        let f = RealFunction::polynomial(&[1.0, 2.0]);
        let cfg = IntegrationConfig::default();
        assert_eq!(integral_from_omega0(&p, &f, p.omega0(), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn constant_integrand_closed_form() {
        let p = params(0.7, 0.3);
        let cfg = IntegrationConfig::default();
        for x in [-2.0, 0.0, 3.5] {
            let v = integral_from_omega0(&p, &RealFunction::constant(2.5), x, &cfg).unwrap();
            let expect = 2.5 * (x - p.omega0());
            assert!((v - expect).abs() < 1e-11 * expect.abs().max(1.0), "{v} vs {expect}");
        }
    }

    #[test]
    fn identity_integrand_pinned_by_brute_force() {
        // antiderivative (t² − ωt)/(1+q) gives (x² − ωx − ω₀² + ωω₀)/(1+q)
        let p = params(0.5, 0.25);
        let oracle = brute_force(&p, |t| t, 1.0, 200);
        let w0 = p.omega0();
        let closed = (1.0 - 0.25 - w0 * w0 + 0.25 * w0) / 1.5;
        assert!((oracle - closed).abs() < 1e-15);
        let frozen = 0.416_666_666_666_666_7;
        assert!((oracle - frozen).abs() < 1e-15);
        let v = integral_from_omega0(&p, &RealFunction::identity(), 1.0, &IntegrationConfig::default()).unwrap();
        assert!((v - frozen).abs() < 1e-13, "{v}");
    }

    #[test]
    fn empty_and_reversed_intervals() {
        let p = params(0.5, 0.25);
        let f = RealFunction::polynomial(&[0.3, -1.0, 2.0]);
        let cfg = IntegrationConfig::default();
        assert_eq!(qomega_integral(&p, &f, 0.7, 0.7, &cfg).unwrap(), 0.0);
        let fwd = qomega_integral(&p, &f, -0.4, 1.3, &cfg).unwrap();
        let rev = qomega_integral(&p, &f, 1.3, -0.4, &cfg).unwrap();
        assert_eq!(fwd, -rev);
    }

    #[test]
    fn fundamental_theorem_on_cube() {
        let p = params(0.5, 0.25);
        let g = RealFunction::polynomial(&[0.0, 0.0, 0.0, 1.0]);
        let cfg = IntegrationConfig::default();
        let v = qomega_integral_with(&p, 0.0, 1.0, &cfg, |t| hahn_derivative(&p, &g, t)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let p = params(0.99, 0.01);
        let cfg = IntegrationConfig {
            max_terms: 20,
            ..Default::default()
        };
        let r = integral_from_omega0(&p, &RealFunction::identity(), 5.0, &cfg);
        assert!(matches!(r, Err(Error::SeriesNotConverged { terms: 20, .. })));
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let p = params(0.5, 0.25);
        let f = RealFunction::new("1/t", |t| 1.0 / t);
        let r = integral_from_omega0(&p, &f, 0.0, &IntegrationConfig::default());
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let vals: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000)).collect();
        let s: CompensatedSum = vals.iter().copied().collect();
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-20);
    }
}
