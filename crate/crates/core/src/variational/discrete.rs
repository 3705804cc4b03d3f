//! The Jackson–Nörlund series of `∫_a^b f(t, y(qt+ω), D y(t))` written over
//! lattice values.
//!
//! Each series term `(x_k − x_{k+1}) f(x_k, y_{k+1}, (y_{k+1} − y_k)/(x_{k+1} − x_k))`
//! is linear-in-`y` inside `f`, so the functional, its gradient and its
//! Hessian are assembled from per-term linear forms. Beyond the last
//! enumerated node `x_N` the orbit is closed off by the quadratic through
//! `(x_{N−1}, x_N, ω₀)`, so `y(ω₀)` couples both branches and the series tail is
//! not simply dropped.

use nalgebra::DMatrix;

use crate::calculus::CompensatedSum;
use crate::error::{finite, Error, Result};
use crate::qcore::QLattice;

use super::Lagrangian;

/// Tail nodes closer to `ω₀` than this (relative) contribute nothing in `f64`.
const TAIL_FLOOR: f64 = 1e-17;
const MAX_TAIL_TERMS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
struct LinearForm {
    idx: [usize; 3],
    coef: [f64; 3],
    len: usize,
}

impl LinearForm {
    fn single(i: usize) -> Self {
        Self {
            idx: [i, 0, 0],
            coef: [1.0, 0.0, 0.0],
            len: 1,
        }
    }

    fn quotient(next: usize, here: usize, step: f64) -> Self {
        Self {
            idx: [next, here, 0],
            coef: [1.0 / step, -1.0 / step, 0.0],
            len: 2,
        }
    }

    fn triple(idx: [usize; 3], coef: [f64; 3]) -> Self {
        Self { idx, coef, len: 3 }
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.coef[k]))
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.entries().map(|(i, c)| c * y[i]).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    weight: f64,
    t: f64,
    u: LinearForm,
    v: LinearForm,
}

/// Truncated functional over the points of one lattice.
#[derive(Debug, Clone)]
pub(crate) struct DiscreteFunctional {
    terms: Vec<Term>,
    len: usize,
    regular_terms: usize,
    tail_terms: usize,
}

/// Value of the discrete functional with its truncation data.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DiscreteValue {
    pub value: f64,
    pub magnitude: f64,
    pub last_term: f64,
}

impl DiscreteFunctional {
    /// `signs[i]` is `+1` for the upper seed and `−1` for the lower one.
    pub fn build(lattice: &QLattice, signs: &[f64]) -> Result<Self> {
        let params = lattice.params();
        let q = params.q();
        let omega0 = params.omega0();
        let o_ix = lattice.omega0_index();
        let depth = lattice.depth();
        let mut terms = Vec::new();
        let mut regular_terms = 0;
        let mut tail_terms = 0;

        for (branch, &sign) in lattice.branches().iter().zip(signs) {
            if branch.is_degenerate() || sign == 0.0 {
                continue;
            }
            let x = branch.values();
            let nodes = branch.nodes();
            let eff = branch.effective_depth(o_ix);
            for k in 0..eff {
                let step = x[k + 1] - x[k];
                terms.push(Term {
                    weight: -sign * step,
                    t: x[k],
                    u: LinearForm::single(nodes[k + 1]),
                    v: LinearForm::quotient(nodes[k + 1], nodes[k], step),
                });
                regular_terms += 1;
            }
            if eff < depth {
                continue;
            }

            // quadratic closure through (z₁, y_{N−1}), (z₂, y_N), (0, y(ω₀))
            let (z1, z2) = (x[depth - 1] - omega0, x[depth] - omega0);
            let idx = [o_ix, nodes[depth - 1], nodes[depth]];
            let a = [1.0 / (z1 * z2), 1.0 / (z1 * (z1 - z2)), 1.0 / (z2 * (z2 - z1))];
            let b = [-(z1 + z2) * a[0], -z2 * a[1], -z1 * a[2]];
            let c = [1.0, 0.0, 0.0];
            let floor = TAIL_FLOOR * omega0.abs().max(1.0);
            let mut z = z2;
            for _ in 0..MAX_TAIL_TERMS {
                if z.abs() < floor {
                    break;
                }
                let zn = q * z;
                let u = [0, 1, 2].map(|j| (a[j] * zn + b[j]) * zn + c[j]);
                let v = [0, 1, 2].map(|j| a[j] * (z + zn) + b[j]);
                terms.push(Term {
                    weight: sign * (z - zn),
                    t: omega0 + z,
                    u: LinearForm::triple(idx, u),
                    v: LinearForm::triple(idx, v),
                });
                tail_terms += 1;
                z = zn;
            }
        }
        if terms.iter().any(|t| !t.weight.is_finite()) {
            return Err(Error::NonFinite {
                what: "series weight".into(),
                t: omega0,
            });
        }
        Ok(Self {
            terms,
            len: lattice.len(),
            regular_terms,
            tail_terms,
        })
    }

    pub fn regular_terms(&self) -> usize {
        self.regular_terms
    }

    pub fn tail_terms(&self) -> usize {
        self.tail_terms
    }

    pub fn value(&self, f: &Lagrangian, y: &[f64]) -> Result<DiscreteValue> {
        let mut acc = CompensatedSum::new();
        let mut magnitude = 0.0;
        let mut last_term = 0.0;
        for term in &self.terms {
            let contrib = term.weight * f.eval(term.t, term.u.eval(y), term.v.eval(y));
            let contrib = finite(contrib, f.label(), term.t)?;
            acc.add(contrib);
            magnitude += contrib.abs();
            last_term = contrib;
        }
        Ok(DiscreteValue {
            value: acc.value(),
            magnitude,
            last_term,
        })
    }

    pub fn gradient(&self, f: &Lagrangian, y: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.len];
        for term in &self.terms {
            let (u, v) = (term.u.eval(y), term.v.eval(y));
            let fu = finite(term.weight * f.d2(term.t, u, v), "partial in u", term.t)?;
            let fv = finite(term.weight * f.d3(term.t, u, v), "partial in v", term.t)?;
            for (i, c) in term.u.entries() {
                g[i] += fu * c;
            }
            for (i, c) in term.v.entries() {
                g[i] += fv * c;
            }
        }
        Ok(g)
    }

    pub fn hessian(&self, f: &Lagrangian, y: &[f64]) -> Result<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.len, self.len);
        for term in &self.terms {
            let (u, v) = (term.u.eval(y), term.v.eval(y));
            let [fuu, fuv, fvv] = f.hessian(term.t, u, v).map(|x| term.weight * x);
            if !(fuu.is_finite() && fuv.is_finite() && fvv.is_finite()) {
                return Err(Error::NonFinite {
                    what: "second partials".into(),
                    t: term.t,
                });
            }
            for (i, ci) in term.u.entries() {
                for (j, cj) in term.u.entries() {
                    h[(i, j)] += fuu * ci * cj;
                }
                for (j, cj) in term.v.entries() {
                    h[(i, j)] += fuv * ci * cj;
                    h[(j, i)] += fuv * ci * cj;
                }
            }
            for (i, ci) in term.v.entries() {
                for (j, cj) in term.v.entries() {
                    h[(i, j)] += fvv * ci * cj;
                }
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QOmegaParams;

    fn quad_lattice(q: f64, w: f64, depth: usize) -> QLattice {
        QLattice::build(QOmegaParams::new(q, w).unwrap(), 0.0, 1.0, depth).unwrap()
    }

    #[test]
    fn exact_for_quadratic_trajectories_at_any_depth() {
        // ∫₀¹ (Dy)² for y = t²: Dy = (1+q)t + ω, series value from the
        // antiderivative of ((1+q)t+ω)².
        for (q, w, depth) in [(0.5, 0.1, 3), (0.5, 0.1, 40), (0.9, 0.05, 12)] {
            let lat = quad_lattice(q, w, depth);
            let y: Vec<f64> = lat.points().iter().map(|t| t * t).collect();
            let f = Lagrangian::new("v^2", |_, _, v| v * v);
            let df = DiscreteFunctional::build(&lat, &[-1.0, 1.0]).unwrap();
            let got = df.value(&f, &y).unwrap().value;
            // brute-force series with closed-form nodes
            let p = lat.params();
            let series = |x: f64| -> f64 {
                let mut s = 0.0;
                for k in 0..4000 {
                    let t = p.orbit_point(x, k);
                    let dy = (1.0 + q) * t + w;
                    s += p.q_pow(k) * dy * dy;
                }
                (x * (1.0 - q) - w) * s
            };
            let want = series(1.0) - series(0.0);
            assert!((got - want).abs() < 1e-11, "q={q} depth={depth}: {got} vs {want}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lat = quad_lattice(0.5, 0.25, 5);
        let f = Lagrangian::new("v^2 + u + t v + u^2 v", |t, u, v| v * v + u + t * v + u * u * v);
        let df = DiscreteFunctional::build(&lat, &[-1.0, 1.0]).unwrap();
        let y: Vec<f64> = lat.points().iter().map(|t| t.sin() + 0.3 * t).collect();
        let g = df.gradient(&f, &y).unwrap();
        let h = df.hessian(&f, &y).unwrap();
        for i in 0..y.len() {
            let step = 1e-6;
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += step;
            ym[i] -= step;
            let fd = (df.value(&f, &yp).unwrap().value - df.value(&f, &ym).unwrap().value) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
            let gp = df.gradient(&f, &yp).unwrap();
            let gm = df.gradient(&f, &ym).unwrap();
            for j in 0..y.len() {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - h[(j, i)]).abs() < 1e-4 * fd.abs().max(1.0), "{i},{j}");
            }
        }
    }
}
