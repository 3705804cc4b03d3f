use std::fmt;
use std::sync::Arc;

type Field = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
type Field2 = Arc<dyn Fn(f64, [f64; 2], [f64; 2]) -> f64 + Send + Sync>;

/// Central-difference step `ε^{1/3}·max(1, |x|)`.
pub(crate) fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

fn hessian_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

/// Lagrangian `f(t, u, v)`, where `u` stands for `y(qt+ω)` and `v` for `D_{q,ω}y(t)`.
#[derive(Clone)]
pub struct Lagrangian {
    f: Field,
    d2: Option<Field>,
    d3: Option<Field>,
    label: String,
}

impl Lagrangian {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            d2: None,
            d3: None,
            label: label.into(),
        }
    }

    /// Attaches the analytic partials `∂₂f = ∂f/∂u` and `∂₃f = ∂f/∂v`.
    pub fn with_partials<D2, D3>(mut self, d2: D2, d3: D3) -> Self
    where
        D2: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        D3: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self.d3 = Some(Arc::new(d3));
        self
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _, _| 0.0).with_partials(|_, _, _| 0.0, |_, _, _| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_partials(&self) -> bool {
        self.d2.is_some() && self.d3.is_some()
    }

    #[inline]
    pub fn eval(&self, t: f64, u: f64, v: f64) -> f64 {
        (self.f)(t, u, v)
    }

    /// `∂f/∂u`, analytic when supplied.
    pub fn d2(&self, t: f64, u: f64, v: f64) -> f64 {
        match &self.d2 {
            Some(d) => d(t, u, v),
            None => self.fd_d2(t, u, v),
        }
    }

    /// `∂f/∂v`, analytic when supplied.
    pub fn d3(&self, t: f64, u: f64, v: f64) -> f64 {
        match &self.d3 {
            Some(d) => d(t, u, v),
            None => self.fd_d3(t, u, v),
        }
    }

    /// Central difference in `u`, ignoring any analytic partial.
    pub fn fd_d2(&self, t: f64, u: f64, v: f64) -> f64 {
        let h = fd_step(u);
        (self.eval(t, u + h, v) - self.eval(t, u - h, v)) / (2.0 * h)
    }

    /// Central difference in `v`, ignoring any analytic partial.
    pub fn fd_d3(&self, t: f64, u: f64, v: f64) -> f64 {
        let h = fd_step(v);
        (self.eval(t, u, v + h) - self.eval(t, u, v - h)) / (2.0 * h)
    }

    /// `[f_uu, f_uv, f_vv]` by finite differences (of the partials when they
    /// are analytic).
    pub fn hessian(&self, t: f64, u: f64, v: f64) -> [f64; 3] {
        if self.has_partials() {
            let hu = fd_step(u);
            let hv = fd_step(v);
            let fuu = (self.d2(t, u + hu, v) - self.d2(t, u - hu, v)) / (2.0 * hu);
            let fvv = (self.d3(t, u, v + hv) - self.d3(t, u, v - hv)) / (2.0 * hv);
            let fuv = 0.5
                * ((self.d2(t, u, v + hv) - self.d2(t, u, v - hv)) / (2.0 * hv)
                    + (self.d3(t, u + hu, v) - self.d3(t, u - hu, v)) / (2.0 * hu));
            return [fuu, fuv, fvv];
        }
        let hu = hessian_step(u);
        let hv = hessian_step(v);
        let f0 = self.eval(t, u, v);
        let fuu = (self.eval(t, u + hu, v) - 2.0 * f0 + self.eval(t, u - hu, v)) / (hu * hu);
        let fvv = (self.eval(t, u, v + hv) - 2.0 * f0 + self.eval(t, u, v - hv)) / (hv * hv);
        let fuv = (self.eval(t, u + hu, v + hv) - self.eval(t, u + hu, v - hv) - self.eval(t, u - hu, v + hv)
            + self.eval(t, u - hu, v - hv))
            / (4.0 * hu * hv);
        [fuu, fuv, fvv]
    }

    /// `λ₀·f − λ·g`.
    pub fn combine(lambda0: f64, f: &Lagrangian, lambda: f64, g: &Lagrangian) -> Lagrangian {
        let label = format!("{lambda0}*({}) - {lambda}*({})", f.label, g.label);
        let (ff, gf) = (f.f.clone(), g.f.clone());
        let out = Lagrangian::new(label, move |t, u, v| lambda0 * ff(t, u, v) - lambda * gf(t, u, v));
        if f.has_partials() && g.has_partials() {
            let (f2, g2) = (f.clone(), g.clone());
            let (f3, g3) = (f.clone(), g.clone());
            out.with_partials(
                move |t, u, v| lambda0 * f2.d2(t, u, v) - lambda * g2.d2(t, u, v),
                move |t, u, v| lambda0 * f3.d3(t, u, v) - lambda * g3.d3(t, u, v),
            )
        } else {
            out
        }
    }

    /// `c·f`.
    pub fn scale(&self, c: f64) -> Lagrangian {
        Lagrangian::combine(c, self, 0.0, &Lagrangian::zero())
    }
}

impl fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lagrangian")
            .field("label", &self.label)
            .field("analytic_partials", &self.has_partials())
            .finish()
    }
}

/// Lagrangian of two unknowns `f(t, [u₁, u₂], [v₁, v₂])`; partials by central
/// differences.
#[derive(Clone)]
pub struct Lagrangian2 {
    f: Field2,
    label: String,
}

impl Lagrangian2 {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, [f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _, _| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, t: f64, u: [f64; 2], v: [f64; 2]) -> f64 {
        (self.f)(t, u, v)
    }

    /// `∂f/∂uᵢ`.
    pub fn du(&self, i: usize, t: f64, u: [f64; 2], v: [f64; 2]) -> f64 {
        let h = fd_step(u[i]);
        let (mut up, mut dn) = (u, u);
        up[i] += h;
        dn[i] -= h;
        (self.eval(t, up, v) - self.eval(t, dn, v)) / (2.0 * h)
    }

    /// `∂f/∂vᵢ`.
    pub fn dv(&self, i: usize, t: f64, u: [f64; 2], v: [f64; 2]) -> f64 {
        let h = fd_step(v[i]);
        let (mut up, mut dn) = (v, v);
        up[i] += h;
        dn[i] -= h;
        (self.eval(t, u, up) - self.eval(t, u, dn)) / (2.0 * h)
    }
}

impl fmt::Debug for Lagrangian2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lagrangian2").field("label", &self.label).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Lagrangian {
        Lagrangian::new("v^2 + u + t v", |t, u, v| v * v + u + t * v)
            .with_partials(|_, _, _| 1.0, |t, _, v| 2.0 * v + t)
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let l = Lagrangian::new("sin(u) v^3 + t u v", |t, u, v| u.sin() * v.powi(3) + t * u * v).with_partials(
            |t, u, v| u.cos() * v.powi(3) + t * v,
            |t, u, v| 3.0 * u.sin() * v * v + t * u,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (t, u, v) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            for (a, n) in [(l.d2(t, u, v), l.fd_d2(t, u, v)), (l.d3(t, u, v), l.fd_d3(t, u, v))] {
                assert!((a - n).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn hessian_of_quadratic() {
        let l = Lagrangian::new("u^2 + 3uv + 2v^2", |_, u, v| u * u + 3.0 * u * v + 2.0 * v * v);
        let h = l.hessian(0.3, 1.2, -0.7);
        for (x, e) in h.iter().zip([2.0, 3.0, 4.0]) {
            assert!((x - e).abs() < 1e-5, "{h:?}");
        }
        let h = sample().hessian(0.5, 1.0, 2.0);
        assert!((h[0]).abs() < 1e-8 && (h[1]).abs() < 1e-8 && (h[2] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn combination_keeps_partials() {
        let f = sample();
        let g = Lagrangian::new("u", |_, u, _| u).with_partials(|_, _, _| 1.0, |_, _, _| 0.0);
        let c = Lagrangian::combine(2.0, &f, 0.5, &g);
        assert!(c.has_partials());
        assert_eq!(c.eval(1.0, 2.0, 3.0), 2.0 * (9.0 + 2.0 + 3.0) - 0.5 * 2.0);
        assert_eq!(c.d2(1.0, 2.0, 3.0), 2.0 - 0.5);
        assert_eq!(c.d3(1.0, 2.0, 3.0), 2.0 * 7.0);
        assert_eq!(f.scale(3.0).d3(1.0, 2.0, 3.0), 21.0);
    }

    #[test]
    fn two_variable_partials() {
        let l = Lagrangian2::new("u1 v2^2 + u2", |_, u, v| u[0] * v[1] * v[1] + u[1]);
        let (u, v) = ([2.0, 1.0], [0.5, 3.0]);
        assert!((l.du(0, 0.0, u, v) - 9.0).abs() < 1e-8);
        assert!((l.du(1, 0.0, u, v) - 1.0).abs() < 1e-8);
        assert!((l.dv(1, 0.0, u, v) - 12.0).abs() < 1e-8);
        assert!(l.dv(0, 0.0, u, v).abs() < 1e-8);
    }
}
