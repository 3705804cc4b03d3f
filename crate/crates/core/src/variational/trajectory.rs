use serde::Serialize;

use crate::calculus::{fixed_point_limit, hahn_derivative, hahn_quotient, RealFunction};
use crate::error::{finite, Error, Result};
use crate::qcore::{QLattice, QOmegaParams};

/// Smallest jump step, relative to `max(1, |ω₀|)`, used when extrapolating a
/// lattice function to `ω₀`.
const VALUE_LIMIT_STEP: f64 = 1e-5;
/// Same for functions that already contain one difference quotient; their
/// rounding error grows with the inverse square of the step.
const COMPOSITE_LIMIT_STEP: f64 = 1e-3;

/// Something that can play the role of `y` in a variational functional.
pub trait Path {
    fn value(&self, t: f64) -> Result<f64>;

    /// `D_{q,ω} y(t)`.
    fn derivative(&self, params: &QOmegaParams, t: f64) -> Result<f64>;

    /// `D_{q,ω} φ(t)` for a function `φ` that is only evaluable where this path
    /// is (typically `s ↦ h(s, y(qs+ω), D y(s))`).
    fn derivative_of(&self, params: &QOmegaParams, t: f64, phi: &dyn Fn(f64) -> Result<f64>) -> Result<f64>;
}

impl Path for RealFunction {
    fn value(&self, t: f64) -> Result<f64> {
        finite(self.eval(t), self.label(), t)
    }

    fn derivative(&self, params: &QOmegaParams, t: f64) -> Result<f64> {
        hahn_derivative(params, self, t)
    }

    fn derivative_of(&self, params: &QOmegaParams, t: f64, phi: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        if params.is_fixed_point(t) {
            fixed_point_limit(params, phi)
        } else {
            hahn_quotient(params, t, phi)
        }
    }
}

/// `(y(qt+ω), D y(t))`, the two slots a Lagrangian sees.
pub fn path_args<P: Path + ?Sized>(y: &P, params: &QOmegaParams, t: f64) -> Result<(f64, f64)> {
    let v = y.derivative(params, t)?;
    let u = y.value(params.jump(t))?;
    Ok((u, v))
}

/// Values of `y` on every point of a truncated lattice.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeTrajectory {
    lattice: QLattice,
    values: Vec<f64>,
}

impl LatticeTrajectory {
    pub fn new(lattice: QLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidParams(format!(
                "trajectory has {} values for {} lattice points",
                values.len(),
                lattice.len()
            )));
        }
        if let Some((ix, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "trajectory value".into(),
                t: lattice.points()[ix],
            });
        }
        Ok(Self { lattice, values })
    }

    /// Samples `f` at every lattice point.
    pub fn sample(lattice: QLattice, f: &RealFunction) -> Result<Self> {
        let values = lattice
            .points()
            .iter()
            .map(|&t| finite(f.eval(t), f.label(), t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, values)
    }

    pub fn lattice(&self) -> &QLattice {
        &self.lattice
    }

    pub fn params(&self) -> &QOmegaParams {
        self.lattice.params()
    }

    /// Values aligned with [`QLattice::points`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.lattice
            .index_of(t)
            .map(|ix| self.values[ix])
            .ok_or(Error::NotALatticePoint { t })
    }

    /// `(values[η(t)] − values[t]) / (η(t) − t)`, or the extrapolated limit at `ω₀`.
    pub fn lattice_derivative(&self, t: f64) -> Result<f64> {
        if self.params().is_fixed_point(t) {
            return self.limit_at_fixed_point(&|s| self.value_at(s), VALUE_LIMIT_STEP);
        }
        let ix = self.lattice.index_of(t).ok_or(Error::NotALatticePoint { t })?;
        let next = self.lattice.next_index(ix).ok_or(Error::MissingNeighbor { t })?;
        let pts = self.lattice.points();
        finite(
            (self.values[next] - self.values[ix]) / (pts[next] - pts[ix]),
            "lattice derivative",
            t,
        )
    }

    /// Derivative at `ω₀` of a function known on the seed branches.
    ///
    /// On each branch the quotients `Qₙ, Qₙ₊₁` of the deepest three points
    /// whose jump step is still resolvable are combined as
    /// `(Qₙ₊₁ − q Qₙ)/(1 − q)`, which cancels the leading `qⁿ` error. The
    /// branch estimates are averaged.
    fn limit_at_fixed_point(&self, phi: &dyn Fn(f64) -> Result<f64>, min_step: f64) -> Result<f64> {
        let params = self.params();
        let q = params.q();
        let floor = min_step * params.omega0().abs().max(1.0);
        let omega0_ix = self.lattice.omega0_index();
        let mut estimates = Vec::new();
        for branch in self.lattice.branches() {
            if branch.is_degenerate() {
                continue;
            }
            let depth = branch.effective_depth(omega0_ix);
            if depth < 3 {
                continue;
            }
            let x = branch.values();
            // deepest n whose three points are distinct from ω₀ with a resolvable step
            let mut n = (0..=depth - 3)
                .rev()
                .find(|&n| (x[n + 1] - x[n + 2]).abs() >= floor)
                .unwrap_or(0);
            loop {
                match three_point_limit(q, &x[n..n + 3], phi) {
                    Ok(v) => {
                        estimates.push(v);
                        break;
                    }
                    Err(Error::MissingNeighbor { .. }) if n > 0 => n -= 1,
                    Err(Error::MissingNeighbor { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        if estimates.is_empty() {
            return Err(Error::DerivativeAtFixedPointUnavailable {
                omega0: params.omega0(),
                reason: "no seed branch reaches deep enough toward the fixed point".into(),
            });
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        finite(mean, "fixed-point derivative", params.omega0())
    }

    /// Largest disagreement between the per-branch limits of `D y` at `ω₀`;
    /// a large value suggests `y` is not differentiable there.
    pub fn branch_disagreement(&self) -> Result<f64> {
        let q = self.params().q();
        let omega0_ix = self.lattice.omega0_index();
        let floor = VALUE_LIMIT_STEP * self.params().omega0().abs().max(1.0);
        let mut est = Vec::new();
        for branch in self.lattice.branches().iter().filter(|b| !b.is_degenerate()) {
            let depth = branch.effective_depth(omega0_ix);
            if depth < 3 {
                continue;
            }
            let x = branch.values();
            let n = (0..=depth - 3)
                .rev()
                .find(|&n| (x[n + 1] - x[n + 2]).abs() >= floor)
                .unwrap_or(0);
            est.push(three_point_limit(q, &x[n..n + 3], &|s| self.value_at(s))?);
        }
        Ok(match est.as_slice() {
            [a, b] => (a - b).abs(),
            _ => 0.0,
        })
    }
}

fn three_point_limit(q: f64, x: &[f64], phi: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let p: Vec<f64> = x.iter().map(|&s| phi(s)).collect::<Result<_>>()?;
    let q0 = (p[1] - p[0]) / (x[1] - x[0]);
    let q1 = (p[2] - p[1]) / (x[2] - x[1]);
    Ok((q1 - q * q0) / (1.0 - q))
}

impl Path for LatticeTrajectory {
    fn value(&self, t: f64) -> Result<f64> {
        self.value_at(t)
    }

    fn derivative(&self, _params: &QOmegaParams, t: f64) -> Result<f64> {
        self.lattice_derivative(t)
    }

    fn derivative_of(&self, params: &QOmegaParams, t: f64, phi: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        if params.is_fixed_point(t) {
            return self.limit_at_fixed_point(phi, COMPOSITE_LIMIT_STEP);
        }
        let ix = self.lattice.index_of(t).ok_or(Error::NotALatticePoint { t })?;
        let next = self.lattice.next_index(ix).ok_or(Error::MissingNeighbor { t })?;
        let pts = self.lattice.points();
        let num = phi(pts[next])? - phi(pts[ix])?;
        finite(num / (pts[next] - pts[ix]), "difference quotient", t)
    }
}
