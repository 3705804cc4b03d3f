use std::fmt;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of one variable with an optional analytic derivative.
///
/// The analytic derivative is consulted only at the fixed point `ω₀`, where
/// the Hahn operator reduces to the ordinary derivative.
#[derive(Clone)]
pub struct RealFunction {
    eval: Scalar,
    classical_derivative: Option<Scalar>,
    label: String,
}

impl RealFunction {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            classical_derivative: None,
            label: label.into(),
        }
    }

    pub fn with_derivative<D>(mut self, d: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.classical_derivative = Some(Arc::new(d));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_derivative(|_| 0.0)
    }

    pub fn identity() -> Self {
        Self::new("t", |t| t).with_derivative(|_| 1.0)
    }

    pub fn polynomial(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.to_vec()).into()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn classical_derivative(&self, t: f64) -> Option<f64> {
        self.classical_derivative.as_ref().map(|d| d(t))
    }

    pub fn has_classical_derivative(&self) -> bool {
        self.classical_derivative.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &RealFunction) -> RealFunction {
        self.combine(other, "+", |x, y| x + y, |_, dx, _, dy| dx + dy)
    }

    /// Pointwise `self · other`.
    pub fn mul(&self, other: &RealFunction) -> RealFunction {
        self.combine(other, "*", |x, y| x * y, |x, dx, y, dy| dx * y + x * dy)
    }

    /// Pointwise `c · self`.
    pub fn scale(&self, c: f64) -> RealFunction {
        let f = self.eval.clone();
        let out = RealFunction::new(format!("{c}*({})", self.label), move |t| c * f(t));
        match &self.classical_derivative {
            Some(d) => {
                let d = d.clone();
                out.with_derivative(move |t| c * d(t))
            }
            None => out,
        }
    }

    fn combine(
        &self,
        other: &RealFunction,
        op: &str,
        value: fn(f64, f64) -> f64,
        deriv: fn(f64, f64, f64, f64) -> f64,
    ) -> RealFunction {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let out = RealFunction::new(format!("({}){op}({})", self.label, other.label), move |t| {
            value(f(t), g(t))
        });
        match (&self.classical_derivative, &other.classical_derivative) {
            (Some(df), Some(dg)) => {
                let (f, g) = (self.eval.clone(), other.eval.clone());
                let (df, dg) = (df.clone(), dg.clone());
                out.with_derivative(move |t| deriv(f(t), df(t), g(t), dg(t)))
            }
            _ => out,
        }
    }
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("label", &self.label)
            .field("classical_derivative", &self.classical_derivative.is_some())
            .finish()
    }
}

/// Dense polynomial `Σ cᵢ tⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn label(&self) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*t"),
                _ => format!("{c}*t^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

impl From<Polynomial> for RealFunction {
    fn from(p: Polynomial) -> Self {
        let d = p.derivative();
        let label = p.label();
        RealFunction::new(label, move |t| p.eval(t)).with_derivative(move |t| d.eval(t))
    }
}

/// Named functions that are not polynomials.
pub mod builtins {
    use super::RealFunction;

    /// Discontinuous function on `[-1, 1]`: `−t` except `f(−1) = 0`, `f(0) = 1`.
    /// Differentiable in the Hahn sense for `q = ω = 1/2`.
    pub fn piecewise_jump() -> RealFunction {
        RealFunction::new("piecewise_jump", |t| {
            if t == -1.0 {
                0.0
            } else if t == 0.0 {
                1.0
            } else {
                -t
            }
        })
        .with_derivative(|_| -1.0)
    }

    /// `g(t) = 1 + t²/2`, nonvanishing weight used by the `D(y·g)` problem.
    pub fn half_square_plus_one() -> RealFunction {
        RealFunction::new("1 + t^2/2", |t| 1.0 + 0.5 * t * t).with_derivative(|t| t)
    }

    pub fn exp() -> RealFunction {
        RealFunction::new("exp(t)", f64::exp).with_derivative(f64::exp)
    }

    pub fn sin() -> RealFunction {
        RealFunction::new("sin(t)", f64::sin).with_derivative(f64::cos)
    }

    /// Looks up a builtin by name.
    pub fn by_name(name: &str) -> Option<RealFunction> {
        match name {
            "piecewise_jump" | "example2_2" => Some(piecewise_jump()),
            "half_square_plus_one" | "g" => Some(half_square_plus_one()),
            "exp" => Some(exp()),
            "sin" => Some(sin()),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &["piecewise_jump", "half_square_plus_one", "exp", "sin"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_eval_and_derivative() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0, 0.0]);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 6.0]);
        let f: RealFunction = p.into();
        assert_eq!(f.classical_derivative(1.0), Some(4.0));
    }

    #[test]
    fn combinators_carry_derivatives() {
        let f = RealFunction::polynomial(&[0.0, 1.0]);
        let g = RealFunction::polynomial(&[1.0, 0.0, 1.0]);
        let h = f.mul(&g).add(&f.scale(2.0));
        assert_eq!(h.eval(2.0), 2.0 * 5.0 + 4.0);
        // (t³ + t + 2t)' = 3t² + 3
        assert_eq!(h.classical_derivative(2.0), Some(15.0));
    }

    #[test]
    fn builtins_resolve() {
        for name in builtins::NAMES {
            assert!(builtins::by_name(name).is_some());
        }
        assert!(builtins::by_name("nope").is_none());
    }
}
