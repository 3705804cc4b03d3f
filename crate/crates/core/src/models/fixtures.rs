//! Worked variational problems with known solutions.

use crate::calculus::{hahn_derivative, hahn_derivative_of, RealFunction};
use crate::error::{finite, Error, Result};
use crate::leitmann::{ControlTrajectories, GaugeTerm, Transformation};
use crate::qcore::{QLattice, QOmegaParams};
use crate::variational::{Lagrangian, Path, VariationalProblem};

/// Names accepted by [`fixture`].
pub const FIXTURE_NAMES: &[&str] = &["example1", "example2", "example4", "example3_control"];

/// `|g|` below this on a lattice point counts as a zero of `g`.
const G_FLOOR: f64 = 1e-13;

/// Data for checking a fixture with the gauge machinery: `f` and `f̄` are
/// related through `transform` up to `D G`.
#[derive(Debug, Clone)]
pub struct LeitmannSetup {
    pub f: Lagrangian,
    pub fbar: Lagrangian,
    pub transform: Transformation,
    pub gauge: GaugeTerm,
    /// A minimizer of the `f̄` problem whose image is the fixture's solution.
    pub ybar: RealFunction,
}

#[derive(Debug, Clone)]
pub struct VariationalFixture {
    pub name: &'static str,
    pub description: String,
    pub problem: VariationalProblem,
    pub solution: RealFunction,
    pub leitmann: Option<LeitmannSetup>,
}

#[derive(Debug, Clone)]
pub struct ControlFixture {
    pub name: &'static str,
    pub description: String,
    pub params: QOmegaParams,
    pub optimum: ControlTrajectories,
    pub expected_minimum: f64,
}

#[derive(Debug, Clone)]
pub enum Fixture {
    Variational(Box<VariationalFixture>),
    Control(Box<ControlFixture>),
}

impl Fixture {
    pub fn name(&self) -> &'static str {
        match self {
            Fixture::Variational(f) => f.name,
            Fixture::Control(f) => f.name,
        }
    }
}

/// A fixture with its default parameters.
pub fn fixture(name: &str) -> Result<Fixture> {
    match name {
        "example1" => Ok(Fixture::Variational(Box::new(example1(QOmegaParams::new(0.5, 0.1)?)?))),
        "example2" => Ok(Fixture::Variational(Box::new(example2(
            QOmegaParams::new(0.5, 0.25)?,
            0.0,
            1.0,
            1.0,
            3.0,
        )?))),
        "example4" => Ok(Fixture::Variational(Box::new(example4(
            QOmegaParams::new(0.5, 0.25)?,
            crate::calculus::builtins::half_square_plus_one(),
            0.0,
            1.0,
            1.0,
            2.0 / 3.0,
            30,
        )?))),
        "example3_control" => Ok(Fixture::Control(Box::new(example3_control(QOmegaParams::new(
            0.5, 0.25,
        )?)))),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

/// `∫₀¹ y(qt+ω) + (D y)²/2` with `y(0) = 0`, `y(1) = 1`; extremal
/// `y = (t² + qt)/(q+1)`, the solution of `D D y = 1` with those boundary values.
pub fn example1(params: QOmegaParams) -> Result<VariationalFixture> {
    let q = params.q();
    let f = Lagrangian::new("u + v^2/2", |_, u, v| u + 0.5 * v * v).with_partials(|_, _, _| 1.0, |_, _, v| v);
    let problem = VariationalProblem::new(f, params, 0.0, 1.0, 0.0, 1.0)?;
    let solution = RealFunction::new("(t^2 + q t)/(q + 1)", move |t| (t * t + q * t) / (q + 1.0))
        .with_derivative(move |t| (2.0 * t + q) / (q + 1.0));
    Ok(VariationalFixture {
        name: "example1",
        description: "minimize int_0^1 y(qt+w) + (Dy)^2/2, y(0)=0, y(1)=1".into(),
        problem,
        solution,
        leitmann: None,
    })
}

/// `∫_a^b (D y)² + y(qt+ω) + t D y` with `y(a) = α`, `y(b) = β`; minimizer
/// `ct + d`, reached from the trivial problem `∫ (D ȳ)²` by `y = ȳ + ct + d`.
pub fn example2(params: QOmegaParams, a: f64, b: f64, alpha: f64, beta: f64) -> Result<VariationalFixture> {
    let c = (alpha - beta) / (a - b);
    let d = (beta * a - b * alpha) / (a - b);
    let f = Lagrangian::new("v^2 + u + t v", |t, u, v| v * v + u + t * v)
        .with_partials(|_, _, _| 1.0, |t, _, v| 2.0 * v + t);
    let problem = VariationalProblem::new(f.clone(), params, a, b, alpha, beta)?;
    let solution = RealFunction::polynomial(&[d, c]);
    let fbar = Lagrangian::new("v^2", |_, _, v| v * v).with_partials(|_, _, _| 0.0, |_, _, v| 2.0 * v);
    let gauge = GaugeTerm::new("2c ybar + t ybar + c t^2 + (c^2 + d) t", move |t, w| {
        2.0 * c * w + t * w + c * t * t + (c * c + d) * t
    })
    .with_partials(move |t, w| w + 2.0 * c * t + c * c + d, move |t, _| 2.0 * c + t);
    Ok(VariationalFixture {
        name: "example2",
        description: format!("minimize int_a^b (Dy)^2 + y(qt+w) + t Dy, y(a)=alpha, y(b)=beta; y = {c} t + {d}"),
        problem,
        solution,
        leitmann: Some(LeitmannSetup {
            f,
            fbar,
            transform: Transformation::shift(RealFunction::polynomial(&[d, c])),
            gauge,
            ybar: RealFunction::constant(0.0),
        }),
    })
}

/// Coefficients `(A, C)` of the minimizer `(At + C)/g(t)` of `∫ [D(y g)]²`.
pub fn example4_coefficients(g: &RealFunction, a: f64, b: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let (ga, gb) = (g.eval(a), g.eval(b));
    (
        (alpha * ga - beta * gb) / (a - b),
        (a * beta * gb - b * alpha * ga) / (a - b),
    )
}

/// `(v g(t) + u D g(t))²`, which is `[D(y g)]²` by the product rule.
pub fn weighted_square_lagrangian(params: QOmegaParams, g: &RealFunction) -> Lagrangian {
    let dg = {
        let g = g.clone();
        move |t: f64| hahn_derivative(&params, &g, t).unwrap_or(f64::NAN)
    };
    let (g1, g2, g3) = (g.clone(), g.clone(), g.clone());
    let (dg1, dg2, dg3) = (dg.clone(), dg.clone(), dg);
    Lagrangian::new(format!("[D(y ({}))]^2", g.label()), move |t, u, v| {
        let w = v * g1.eval(t) + u * dg1(t);
        w * w
    })
    .with_partials(
        move |t, u, v| {
            let d = dg2(t);
            2.0 * (v * g2.eval(t) + u * d) * d
        },
        move |t, u, v| {
            let gt = g3.eval(t);
            2.0 * (v * gt + u * dg3(t)) * gt
        },
    )
}

/// `∫_a^b [D(y g)]²` with `y(a) = α`, `y(b) = β`; minimizer `(At + C)/g`.
/// `g` must not vanish on `[a,b]_{q,ω}` at the given depth.
pub fn example4(
    params: QOmegaParams,
    g: RealFunction,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    depth: usize,
) -> Result<VariationalFixture> {
    let lattice = QLattice::build(params, a, b, depth)?;
    for &t in lattice.points() {
        let gt = finite(g.eval(t), g.label(), t)?;
        if gt.abs() < G_FLOOR {
            return Err(Error::SingularCoefficient { t, denominator: gt });
        }
    }
    let (ca, cc) = example4_coefficients(&g, a, b, alpha, beta);
    let f = weighted_square_lagrangian(params, &g);
    let problem = VariationalProblem::new(f.clone(), params, a, b, alpha, beta)?;

    let solution = quotient_by(&g, ca, cc, "(A t + C)/g");
    // ȳ = 1/g is a minimizer of the same functional (D(ȳ g) = 0); the shift
    // p = (At + B)/g with B = C − 1 carries it onto the solution
    let cb = cc - 1.0;
    let ybar = quotient_by(&g, 0.0, 1.0, "1/g");
    let p = quotient_by(&g, ca, cb, "(A t + B)/g");
    let g_gauge = g.clone();
    let mut gauge = GaugeTerm::new("A (2 ybar g + A t + B)", move |t, w| {
        ca * (2.0 * w * g_gauge.eval(t) + ca * t + cb)
    });
    if g.has_classical_derivative() {
        let (g1, g2) = (g.clone(), g.clone());
        gauge = gauge.with_partials(
            move |t, w| ca * (2.0 * w * g1.classical_derivative(t).unwrap_or(f64::NAN) + ca),
            move |t, _| 2.0 * ca * g2.eval(t),
        );
    }
    Ok(VariationalFixture {
        name: "example4",
        description: format!(
            "minimize int_a^b [D(y g)]^2 with g = {}; y = ({ca} t + {cc})/g",
            g.label()
        ),
        problem,
        solution,
        leitmann: Some(LeitmannSetup {
            f: f.clone(),
            fbar: f,
            transform: Transformation::shift(p),
            gauge,
            ybar,
        }),
    })
}

/// `(A t + C)/g(t)`, with its classical derivative when `g` has one.
fn quotient_by(g: &RealFunction, a: f64, c: f64, label: &str) -> RealFunction {
    let g1 = g.clone();
    let y = RealFunction::new(label, move |t| (a * t + c) / g1.eval(t));
    if g.has_classical_derivative() {
        let g2 = g.clone();
        y.with_derivative(move |t| {
            let gt = g2.eval(t);
            let dg = g2.classical_derivative(t).unwrap_or(f64::NAN);
            (a * gt - (a * t + c) * dg) / (gt * gt)
        })
    } else {
        y
    }
}

/// `[D(y g)]² − [D(ȳ g)]² − D(p g)·D(2ȳ g + p g)` at `t` with `y = ȳ + p`.
/// Vanishes identically; each derivative is taken directly from its product.
pub fn gauge_expansion_residual(
    params: &QOmegaParams,
    g: &RealFunction,
    ybar: &RealFunction,
    p: &RealFunction,
    t: f64,
) -> Result<f64> {
    let d = |h: &dyn Fn(f64) -> f64| hahn_derivative_of(params, t, |s| finite(h(s), "product", s));
    let dyg = d(&|s| (ybar.eval(s) + p.eval(s)) * g.eval(s))?;
    let dybg = d(&|s| ybar.eval(s) * g.eval(s))?;
    let dpg = d(&|s| p.eval(s) * g.eval(s))?;
    let dmix = d(&|s| (2.0 * ybar.eval(s) + p.eval(s)) * g.eval(s))?;
    finite(dyg * dyg - dybg * dybg - dpg * dmix, "expansion residual", t)
}

/// `∫₀¹ u₁² + u₂²` under `D y₁ = exp(u₁) + u₁ + u₂`, `D y₂ = u₂`, `y₁(0) = 0`,
/// `y₁(1) = 2`, `y₂(0) = 0`, `y₂(1) = 1`, `u ∈ [−1, 1]`; minimum 1 at
/// `(u₁, u₂, y₁, y₂) = (0, 1, 2t, t)`.
pub fn example3_control(params: QOmegaParams) -> ControlFixture {
    ControlFixture {
        name: "example3_control",
        description: "minimize int_0^1 u1^2 + u2^2 subject to Dy1 = exp(u1) + u1 + u2, Dy2 = u2".into(),
        params,
        optimum: ControlTrajectories {
            y1: RealFunction::polynomial(&[0.0, 2.0]),
            y2: RealFunction::identity(),
            u1: RealFunction::constant(0.0),
            u2: RealFunction::constant(1.0),
        },
        expected_minimum: 1.0,
    }
}

impl VariationalFixture {
    /// Boundary mismatch of the analytic solution.
    pub fn boundary_error(&self) -> Result<f64> {
        let p = &self.problem;
        let ya = self.solution.value(p.a)?;
        let yb = self.solution.value(p.b)?;
        Ok((ya - p.alpha).abs().max((yb - p.beta).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::builtins;
    use crate::variational::el_residual;

    #[test]
    fn names_resolve() {
        for name in FIXTURE_NAMES {
            assert_eq!(fixture(name).unwrap().name(), *name);
        }
        assert!(matches!(fixture("example9"), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn example2_minimizer_interpolates() {
        let Fixture::Variational(f) = fixture("example2").unwrap() else {
            panic!()
        };
        assert_eq!(f.solution.eval(f.problem.a), f.problem.alpha);
        assert_eq!(f.boundary_error().unwrap(), 0.0);
    }

    #[test]
    fn example4_coefficients_for_default_weight() {
        let g = builtins::half_square_plus_one();
        let (a, c) = example4_coefficients(&g, 0.0, 1.0, 1.0, 2.0 / 3.0);
        assert_eq!(a, 0.0);
        assert_eq!(c, 1.0);
        let Fixture::Variational(f) = fixture("example4").unwrap() else {
            panic!()
        };
        assert_eq!(f.solution.eval(0.0), 1.0);
        assert!(f.boundary_error().unwrap() < 1e-15);
    }

    #[test]
    fn example4_rejects_vanishing_weight() {
        let p = QOmegaParams::new(0.5, 0.25).unwrap();
        let g = RealFunction::new("t - 0.5", |t| t - 0.5);
        assert!(matches!(
            example4(p, g, 0.0, 1.0, 1.0, 2.0, 6),
            Err(Error::SingularCoefficient { .. })
        ));
    }

    #[test]
    fn example4_solution_with_slope() {
        let p = QOmegaParams::new(0.5, 0.25).unwrap();
        let f = example4(p, builtins::half_square_plus_one(), 0.0, 1.0, 1.0, 1.0, 8).unwrap();
        let lat = f.problem.lattice(5).unwrap();
        for &t in lat.points() {
            assert!(el_residual(&f.problem, &f.solution, t).unwrap().abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn expansion_identity() {
        let p = QOmegaParams::new(0.5, 0.25).unwrap();
        let g = builtins::half_square_plus_one();
        let pt = quotient_by(&g, 0.5, -0.5, "p");
        for t in [0.0, 1.0, 0.25, 0.375, 0.5] {
            let r = gauge_expansion_residual(&p, &g, &builtins::sin(), &pt, t).unwrap();
            assert!(r.abs() < 1e-9, "{t}: {r}");
        }
    }
}
