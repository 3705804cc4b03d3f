use proptest::prelude::*;

use qomega::calculus::{
    hahn_derivative, integral_from_omega0, qomega_exp, qomega_integral, qomega_integral_with, IntegrationConfig,
    RealFunction,
};
use qomega::qcore::{QLattice, QOmegaParams};

fn params() -> impl Strategy<Value = QOmegaParams> {
    (0.05f64..0.95, 0.01f64..1.0).prop_map(|(q, w)| QOmegaParams::new(q, w).unwrap())
}

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..=max_len)
}

fn poly(c: &[f64]) -> RealFunction {
    RealFunction::polynomial(c)
}

fn cfg() -> IntegrationConfig {
    IntegrationConfig::default()
}

proptest! {
    #[test]
    fn jump_contracts_toward_fixed_point(p in params(), t in -20.0f64..20.0) {
        let w0 = p.omega0();
        let lhs = (p.jump(t) - w0).abs();
        let rhs = p.q() * (t - w0).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + t.abs() + w0.abs()));
    }

    #[test]
    fn lattice_follows_recurrence(p in params(), a in -5.0f64..0.0, len in 0.1f64..5.0, depth in 1usize..30) {
        let lat = QLattice::build(p, a, a + len, depth).unwrap();
        for br in lat.branches().iter().filter(|b| !b.is_degenerate()) {
            let x = br.values();
            for n in 0..x.len() - 1 {
                let closed = p.orbit_point(br.seed(), n + 1);
                prop_assert!((x[n + 1] - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
                if !p.is_fixed_point(x[n + 1]) {
                    prop_assert!((x[n + 1] - p.omega0()).abs() < (x[n] - p.omega0()).abs());
                }
            }
        }
    }

    #[test]
    fn shift_identity(p in params(), c in coeffs(5), d in 0.2f64..3.0, side in any::<bool>()) {
        let t = if side { p.omega0() + d } else { p.omega0() - d };
        let f = poly(&c);
        let df = hahn_derivative(&p, &f, t).unwrap();
        let lhs = f.eval(p.jump(t));
        let rhs = f.eval(t) + (p.jump(t) - t) * df;
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(f.eval(t).abs()).max(1e-300));
    }

    #[test]
    fn linearity_and_product(p in params(), c1 in coeffs(4), c2 in coeffs(4), al in -3.0f64..3.0, d in 0.3f64..2.0) {
        let t = p.omega0() + d;
        let (f, g) = (poly(&c1), poly(&c2));
        let (df, dg) = (hahn_derivative(&p, &f, t).unwrap(), hahn_derivative(&p, &g, t).unwrap());
        let h = (p.jump(t) - t).abs();
        let mag = |r: &RealFunction| (r.eval(t).abs() + r.eval(p.jump(t)).abs()) / h;

        let lin = hahn_derivative(&p, &f.scale(al).add(&g), t).unwrap();
        let scale = al.abs() * mag(&f) + mag(&g);
        prop_assert!((lin - (al * df + dg)).abs() <= 1e-12 * scale.max(1e-300));

        let fg = f.mul(&g);
        let prod = hahn_derivative(&p, &fg, t).unwrap();
        let want = df * g.eval(t) + f.eval(p.jump(t)) * dg;
        let scale = mag(&fg) + mag(&f) * g.eval(t).abs() + f.eval(p.jump(t)).abs() * mag(&g);
        prop_assert!((prod - want).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn constant_series(p in params(), c in -5.0f64..5.0, x in -5.0f64..5.0) {
        let v = integral_from_omega0(&p, &RealFunction::constant(c), x, &cfg()).unwrap();
        let want = c * (x - p.omega0());
        prop_assert!((v - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn additivity_and_reversal(p in params(), c in coeffs(4), a in -2.0f64..2.0, b in -2.0f64..2.0, m in -2.0f64..2.0) {
        let f = poly(&c);
        let (a, b, m) = (p.omega0() + a, p.omega0() + b, p.omega0() + m);
        let ab = qomega_integral(&p, &f, a, b, &cfg()).unwrap();
        let am = qomega_integral(&p, &f, a, m, &cfg()).unwrap();
        let mb = qomega_integral(&p, &f, m, b, &cfg()).unwrap();
        prop_assert!((ab - am - mb).abs() <= 1e-10 * (1.0 + am.abs() + mb.abs()));
        prop_assert_eq!(qomega_integral(&p, &f, b, a, &cfg()).unwrap(), -ab);
    }

    #[test]
    fn fundamental_theorem(p in params(), c in coeffs(5), a in 0.1f64..1.5, b in 0.1f64..1.5) {
        prop_assume!(p.omega0() < 3.0);
        let f = poly(&c);
        let (a, b) = (p.omega0() - a, p.omega0() + b);
        let s = qomega_integral_with(&p, a, b, &cfg(), |t| hahn_derivative(&p, &f, t)).unwrap();
        let want = f.eval(b) - f.eval(a);
        prop_assert!((s.value - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn domination_on_a_common_orbit(
        p in params(),
        c in coeffs(4),
        seed in -3.0f64..3.0,
        n1 in 0usize..8,
        n2 in 0usize..8,
        slack in 0.0f64..1.0,
    ) {
        let f = poly(&c);
        let s = p.omega0() + seed;
        let (u, v) = (p.orbit_point(s, n1), p.orbit_point(s, n2));
        let (lo, hi) = (u.min(v), u.max(v));
        let f2 = f.clone();
        let g = RealFunction::new("|f| + slack", move |t| f2.eval(t).abs() + slack);
        let lhs = qomega_integral(&p, &f, lo, hi, &cfg()).unwrap().abs();
        let rhs = qomega_integral(&p, &g, lo, hi, &cfg()).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn exponential_trivial_cases(p in params(), z in -3.0f64..3.0, t in -3.0f64..3.0) {
        prop_assert_eq!(qomega_exp(&p, 0.0, t, &cfg()).unwrap().value, 1.0);
        prop_assert_eq!(qomega_exp(&p, z, p.omega0(), &cfg()).unwrap().value, 1.0);
    }
}

#[test]
fn classical_limit_of_derivative_improves() {
    let f = RealFunction::new("t^3", |t| t * t * t);
    let mut last = f64::INFINITY;
    for m in 4..=16 {
        let h = 2f64.powi(-m);
        let p = QOmegaParams::new(1.0 - h, h).unwrap();
        let err = (hahn_derivative(&p, &f, 2.0).unwrap() - 12.0).abs();
        assert!(err < last, "m={m}: {err}");
        last = err;
    }
    // error is 6h − h² at t = 2
    assert!((last - (6.0 * 2f64.powi(-16) - 2f64.powi(-32))).abs() < 1e-9);
}

#[test]
fn exponential_matches_brute_force_product() {
    let p = QOmegaParams::new(0.5, 0.25).unwrap();
    let mut prod = 1.0;
    for k in 0..200 {
        prod *= 1.0 - 0.05 * 0.5f64.powi(k) * (1.0 * 0.5 - 0.25);
    }
    let e = qomega_exp(&p, -0.05, 1.0, &cfg()).unwrap();
    assert!((e.value - prod).abs() < 1e-12);
}
