//! The q,ω-exponential `E(z,t) = Π_{k≥0} (1 + z qᵏ (t(1−q) − ω))`.

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::qcore::QOmegaParams;

use super::IntegrationConfig;

/// Truncated product and how it ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpOutcome {
    pub value: f64,
    /// Number of factors multiplied in.
    pub factors: usize,
    /// Some factor was exactly zero, so the product is a genuine zero.
    pub zero_factor: bool,
}

/// `E(z, t)` truncated once `|z qᴷ (t(1−q) − ω)| < rel_tol`.
///
/// Exactly 1 at `t = ω₀` and for `z = 0`. A vanishing factor yields 0 with
/// `zero_factor` set rather than an error.
pub fn qomega_exp(params: &QOmegaParams, z: f64, t: f64, cfg: &IntegrationConfig) -> Result<ExpOutcome> {
    cfg.validate()?;
    if !z.is_finite() || !t.is_finite() {
        return Err(Error::InvalidParams(format!(
            "exponential needs finite z and t, got z = {z}, t = {t}"
        )));
    }
    let base = t * (1.0 - params.q()) - params.omega();
    if z == 0.0 || params.is_fixed_point(t) || base == 0.0 {
        return Ok(ExpOutcome {
            value: 1.0,
            factors: 0,
            zero_factor: false,
        });
    }
    let mut perturbation = z * base;
    let mut value = 1.0;
    for k in 0..cfg.max_terms {
        let factor = 1.0 + perturbation;
        if factor == 0.0 {
            return Ok(ExpOutcome {
                value: 0.0,
                factors: k + 1,
                zero_factor: true,
            });
        }
        value *= factor;
        if perturbation.abs() < cfg.rel_tol {
            return Ok(ExpOutcome {
                value: finite(value, "q,omega-exponential", t)?,
                factors: k + 1,
                zero_factor: false,
            });
        }
        perturbation *= params.q();
    }
    Err(Error::NonConvergence { factors: cfg.max_terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: f64, w: f64) -> QOmegaParams {
        QOmegaParams::new(q, w).unwrap()
    }

    #[test]
    fn trivial_values() {
        let p = params(0.5, 0.25);
        let cfg = IntegrationConfig::default();
        assert_eq!(qomega_exp(&p, 0.0, 3.0, &cfg).unwrap().value, 1.0);
        assert_eq!(qomega_exp(&p, -7.0, p.omega0(), &cfg).unwrap().value, 1.0);
    }

    #[test]
    fn matches_brute_force_product() {
        let p = params(0.5, 0.25);
        let (q, w, z, t) = (0.5f64, 0.25, -0.05, 1.0);
        let oracle: f64 = (0..200).map(|k| 1.0 + z * q.powi(k) * (t * (1.0 - q) - w)).product();
        let v = qomega_exp(&p, z, t, &IntegrationConfig::default()).unwrap();
        // neglected factors contribute at most rel_tol·q/(1−q)
        assert!((v.value - oracle).abs() < 1e-12, "{} vs {oracle}", v.value);
        assert!((oracle - 0.975_207_590_524_793_9).abs() < 1e-14, "{oracle}");
    }

    #[test]
    fn zero_factor_flagged() {
        let p = params(0.5, 0.25);
        // first factor 1 + z(t/2 − 1/4) vanishes at z = −4, t = 1
        let v = qomega_exp(&p, -4.0, 1.0, &IntegrationConfig::default()).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.zero_factor);
    }

    #[test]
    fn max_terms_exhausted() {
        let p = params(0.999, 0.001);
        let cfg = IntegrationConfig {
            max_terms: 10,
            ..Default::default()
        };
        assert!(matches!(
            qomega_exp(&p, 1.0, 5.0, &cfg),
            Err(Error::NonConvergence { factors: 10 })
        ));
    }
}
