//! The computations behind each subcommand.

use qomega::calculus::{builtins, hahn_derivative, qomega_exp, qomega_integral_with, IntegrationConfig, RealFunction};
use qomega::leitmann::{
    control_functional, control_system_residual, probe_family, verify_constant_difference, verify_control_invariance,
    verify_gauge_identity,
};
use qomega::models::{
    example1, example2, example3_control, example4, fixture, ramsey_consumption, ramsey_el_residual, Fixture,
    RamseyConfig, Utility, VariationalFixture, FIXTURE_NAMES,
};
use qomega::variational::{el_residual, evaluate_functional, solve_direct, SolveOptions, ADMISSIBILITY_TOL};
use qomega::{Error, QLattice, QOmegaParams, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::Overrides;

/// Smallest lattice step used for residual checks.
const CHECK_MIN_STEP: f64 = 2e-3;
const SOLVE_DEPTH: usize = 30;
const RAMSEY_DEPTH: usize = 10;
const CONTROL_DEPTH: usize = 10;
const EXAMPLE4_DEPTH: usize = 30;
const DEFAULT_SHIFTS: &[f64] = &[-1.0, -0.5, 0.5, 1.0, 2.0];
const PROBE_SCALES: &[f64] = &[0.0, 0.5, -1.0, 2.0, -3.0];

#[derive(Debug, Default, Serialize)]
pub struct Diagnostics {
    pub truncation_index: usize,
    pub tail_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct Outcome {
    pub results: Value,
    pub diagnostics: Diagnostics,
    /// `(point, value)` pairs for CSV output.
    pub rows: Vec<[f64; 2]>,
}

fn check_lattice(params: QOmegaParams, a: f64, b: f64, depth: Option<usize>) -> Result<QLattice> {
    let depth = depth.unwrap_or_else(|| params.resolvable_depth(&[a, b], CHECK_MIN_STEP));
    QLattice::build(params, a, b, depth)
}

fn fixed_point_warning(params: &QOmegaParams, t: f64) -> Option<String> {
    params
        .is_fixed_point(t)
        .then(|| format!("t = {t} is the fixed point; the value is the classical derivative"))
}

pub fn deriv(
    params: &QOmegaParams,
    f: &RealFunction,
    t: &[f64],
    a: Option<f64>,
    b: Option<f64>,
    depth: Option<usize>,
) -> Result<Outcome> {
    let points: Vec<f64> = match (t.is_empty(), a, b) {
        (false, None, None) => t.to_vec(),
        (true, Some(a), Some(b)) => QLattice::build(*params, a, b, depth.unwrap_or(10))?.points().to_vec(),
        _ => {
            return Err(Error::InvalidParams(
                "give evaluation points with --t, or a lattice with --a and --b".into(),
            ))
        }
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut warnings = Vec::new();
    for &x in &points {
        rows.push([x, hahn_derivative(params, f, x)?]);
        warnings.extend(fixed_point_warning(params, x));
    }
    let mut results = json!({
        "function": f.label(),
        "omega0": params.omega0(),
        "points": rows.iter().map(|[t, v]| json!({"t": t, "value": v})).collect::<Vec<_>>(),
    });
    if let [[_, v]] = rows[..] {
        results["value"] = json!(v);
    }
    Ok(Outcome {
        results,
        diagnostics: Diagnostics {
            warnings,
            ..Diagnostics::default()
        },
        rows,
    })
}

pub fn integral(params: &QOmegaParams, f: &RealFunction, a: f64, b: f64, cfg: &IntegrationConfig) -> Result<Outcome> {
    let sum = qomega_integral_with(params, a, b, cfg, |t| {
        let v = f.eval(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                what: f.label().to_string(),
                t,
            })
        }
    })?;
    Ok(Outcome {
        results: json!({
            "function": f.label(),
            "value": sum.value,
            "from_omega0_to_b": sum.upper.value,
            "from_omega0_to_a": sum.lower.value,
        }),
        diagnostics: Diagnostics {
            truncation_index: sum.truncation_index(),
            tail_estimate: sum.tail_estimate(),
            warnings: Vec::new(),
        },
        rows: vec![[b, sum.value]],
    })
}

pub fn exp(params: &QOmegaParams, z: f64, t: f64, cfg: &IntegrationConfig) -> Result<Outcome> {
    let e = qomega_exp(params, z, t, cfg)?;
    let q = params.q();
    // log of the neglected factors is about the geometric tail of the perturbations
    let tail = (z * (t * (1.0 - q) - params.omega())).abs() * q.powi(e.factors as i32) / (1.0 - q);
    let mut warnings = Vec::new();
    if e.zero_factor {
        warnings.push("a factor of the product is exactly zero".to_string());
    }
    Ok(Outcome {
        results: json!({"value": e.value, "factors": e.factors, "zero_factor": e.zero_factor}),
        diagnostics: Diagnostics {
            truncation_index: e.factors,
            tail_estimate: if e.factors == 0 { 0.0 } else { tail * e.value.abs() },
            warnings,
        },
        rows: vec![[t, e.value]],
    })
}

/// A fixture with any of its parameters replaced.
pub fn load_fixture(name: &str, o: &Overrides, depth: Option<usize>) -> Result<Fixture> {
    let base = fixture(name)?;
    let default_params = match &base {
        Fixture::Variational(f) => f.problem.params,
        Fixture::Control(c) => c.params,
    };
    let params = QOmegaParams::new(
        o.q.unwrap_or(default_params.q()),
        o.omega.unwrap_or(default_params.omega()),
    )?;
    let fixed_boundary = || {
        if [o.a, o.b, o.alpha, o.beta].iter().any(Option::is_some) {
            return Err(Error::InvalidParams(format!(
                "fixture `{name}` has fixed interval and boundary values"
            )));
        }
        Ok(())
    };
    match base {
        Fixture::Control(_) => {
            fixed_boundary()?;
            Ok(Fixture::Control(Box::new(example3_control(params))))
        }
        Fixture::Variational(f) => {
            let p = &f.problem;
            let (a, b) = (o.a.unwrap_or(p.a), o.b.unwrap_or(p.b));
            let (alpha, beta) = (o.alpha.unwrap_or(p.alpha), o.beta.unwrap_or(p.beta));
            let fx = match f.name {
                "example1" => {
                    fixed_boundary()?;
                    example1(params)?
                }
                "example2" => example2(params, a, b, alpha, beta)?,
                _ => {
                    let g = builtins::half_square_plus_one();
                    example4(params, g, a, b, alpha, beta, depth.unwrap_or(EXAMPLE4_DEPTH))?
                }
            };
            Ok(Fixture::Variational(Box::new(fx)))
        }
    }
}

pub fn list_fixtures() -> Result<Outcome> {
    let mut entries = Vec::new();
    for name in FIXTURE_NAMES {
        let description = match fixture(name)? {
            Fixture::Variational(f) => f.description,
            Fixture::Control(c) => c.description,
        };
        entries.push(json!({"name": name, "description": description}));
    }
    Ok(Outcome {
        results: json!({ "fixtures": entries }),
        diagnostics: Diagnostics::default(),
        rows: Vec::new(),
    })
}

pub fn el_check(fx: &Fixture, candidate: Option<&RealFunction>, depth: Option<usize>) -> Result<Outcome> {
    match fx {
        Fixture::Variational(f) => variational_el(f, candidate, depth),
        Fixture::Control(c) => {
            if candidate.is_some() {
                return Err(Error::InvalidParams(
                    "the control fixture takes no candidate path".into(),
                ));
            }
            let lattice = QLattice::build(c.params, 0.0, 1.0, depth.unwrap_or(CONTROL_DEPTH))?;
            let mut rows = Vec::with_capacity(lattice.len());
            for &t in lattice.points() {
                let r = control_system_residual(&c.params, &c.optimum, t)?;
                rows.push([t, r[0].abs().max(r[1].abs())]);
            }
            let max = rows.iter().fold(0.0f64, |m, r| m.max(r[1]));
            let functional = control_functional(&c.params, &c.optimum, &IntegrationConfig::default())?;
            Ok(Outcome {
                results: json!({
                    "fixture": c.name,
                    "q": c.params.q(),
                    "omega": c.params.omega(),
                    "max_residual": max,
                    "points": lattice.len(),
                    "functional": functional,
                    "expected_minimum": c.expected_minimum,
                }),
                diagnostics: Diagnostics::default(),
                rows,
            })
        }
    }
}

fn variational_el(f: &VariationalFixture, candidate: Option<&RealFunction>, depth: Option<usize>) -> Result<Outcome> {
    let p = &f.problem;
    let y = candidate.unwrap_or(&f.solution);
    let lattice = check_lattice(p.params, p.a, p.b, depth)?;
    let mut rows = Vec::with_capacity(lattice.len());
    for &t in lattice.points() {
        rows.push([t, el_residual(p, y, t)?]);
    }
    let max = rows.iter().fold(0.0f64, |m, r| m.max(r[1].abs()));
    let value = evaluate_functional(p, y, &IntegrationConfig::default())?;
    let mut warnings = value.warnings;
    if (y.eval(p.a) - p.alpha).abs() > ADMISSIBILITY_TOL || (y.eval(p.b) - p.beta).abs() > ADMISSIBILITY_TOL {
        warnings.push("candidate is not admissible".to_string());
    }
    Ok(Outcome {
        results: json!({
            "fixture": f.name,
            "candidate": y.label(),
            "q": p.params.q(),
            "omega": p.params.omega(),
            "a": p.a,
            "b": p.b,
            "alpha": p.alpha,
            "beta": p.beta,
            "depth": lattice.depth(),
            "points": lattice.len(),
            "max_residual": max,
            "functional": value.value,
        }),
        diagnostics: Diagnostics {
            truncation_index: value.truncation_index,
            tail_estimate: value.tail_estimate,
            warnings,
        },
        rows,
    })
}

fn variational_only<'a>(fx: &'a Fixture, what: &str) -> Result<&'a VariationalFixture> {
    match fx {
        Fixture::Variational(f) => Ok(f),
        Fixture::Control(c) => Err(Error::InvalidParams(format!(
            "{what} does not apply to fixture `{}`",
            c.name
        ))),
    }
}

pub fn solve(fx: &Fixture, depth: Option<usize>, cfg: &IntegrationConfig) -> Result<Outcome> {
    let f = variational_only(fx, "solve")?;
    let p = &f.problem;
    let report = solve_direct(p, depth.unwrap_or(SOLVE_DEPTH), &SolveOptions::default())?;
    let traj = &report.trajectory;
    let rows: Vec<[f64; 2]> = traj
        .lattice()
        .points()
        .iter()
        .zip(traj.values())
        .map(|(&t, &v)| [t, v])
        .collect();
    let max_error = rows
        .iter()
        .fold(0.0f64, |m, [t, v]| m.max((v - f.solution.eval(*t)).abs()));
    let exact = evaluate_functional(p, &f.solution, cfg)?;
    let discrete = evaluate_functional(p, traj, cfg)?;
    Ok(Outcome {
        results: json!({
            "fixture": f.name,
            "q": p.params.q(),
            "omega": p.params.omega(),
            "depth": traj.lattice().depth(),
            "functional": report.functional,
            "solution_functional": exact.value,
            "max_error_vs_solution": max_error,
            "iterations": report.iterations,
            "step_norm": report.step_norm,
            "gradient_norm": report.gradient_norm,
        }),
        diagnostics: Diagnostics {
            truncation_index: discrete.truncation_index,
            tail_estimate: discrete.tail_estimate,
            warnings: discrete.warnings,
        },
        rows,
    })
}

pub fn leitmann(fx: &Fixture, shifts: &[f64], depth: Option<usize>, cfg: &IntegrationConfig) -> Result<Outcome> {
    match fx {
        Fixture::Control(c) => {
            let shifts = if shifts.is_empty() { DEFAULT_SHIFTS } else { shifts };
            let mut reports = Vec::with_capacity(shifts.len());
            let mut rows = Vec::with_capacity(shifts.len());
            for &s in shifts {
                let r = verify_control_invariance(&c.params, s, &c.optimum, depth.unwrap_or(CONTROL_DEPTH), cfg)?;
                rows.push([s, r.shift_error]);
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.passed);
            Ok(Outcome {
                results: json!({"fixture": c.name, "passed": passed, "reports": reports}),
                diagnostics: Diagnostics::default(),
                rows,
            })
        }
        Fixture::Variational(f) => {
            let Some(setup) = &f.leitmann else {
                return Err(Error::InvalidParams(format!("fixture `{}` has no gauge setup", f.name)));
            };
            let p = &f.problem;
            let lattice = check_lattice(p.params, p.a, p.b, depth)?;
            let mut rows = Vec::with_capacity(lattice.len());
            for &t in lattice.points() {
                let r = verify_gauge_identity(
                    &p.params,
                    &setup.f,
                    &setup.fbar,
                    &setup.transform,
                    &setup.gauge,
                    &setup.ybar,
                    t,
                )?;
                rows.push([t, r]);
            }
            let gauge_max = rows.iter().fold(0.0f64, |m, r| m.max(r[1].abs()));
            let samples = probe_family(&f.solution, p.a, p.b, PROBE_SCALES);
            let diff = verify_constant_difference(
                &p.params,
                &setup.f,
                &setup.fbar,
                &setup.transform,
                &samples,
                p.a,
                p.b,
                cfg,
            )?;
            Ok(Outcome {
                results: json!({
                    "fixture": f.name,
                    "transformation": setup.transform.label(),
                    "gauge": setup.gauge.label(),
                    "points": lattice.len(),
                    "gauge_max_residual": gauge_max,
                    "constant_difference": diff,
                }),
                diagnostics: Diagnostics::default(),
                rows,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ramsey(
    params: QOmegaParams,
    w: &RealFunction,
    p: f64,
    r: f64,
    horizon: f64,
    utility: Utility,
    depth: Option<usize>,
    cfg: &IntegrationConfig,
) -> Result<Outcome> {
    let depth = depth.unwrap_or(RAMSEY_DEPTH);
    let mut exp_cfg = *cfg;
    exp_cfg.max_terms = exp_cfg.max_terms.max(1_000_000);
    let config = RamseyConfig::new(params, p, r, horizon, utility, depth)?.with_exp_config(exp_cfg)?;
    let lattice = QLattice::build(params, 0.0, horizon, depth)?;
    let mut points = Vec::with_capacity(lattice.len());
    let mut rows = Vec::with_capacity(lattice.len());
    let mut truncation_index = 0;
    for &t in lattice.points() {
        let c = ramsey_consumption(&config, w, t)?;
        let res = ramsey_el_residual(&config, w, t)?;
        truncation_index = truncation_index.max(qomega_exp(&params, -p, t, &exp_cfg)?.factors);
        points.push(json!({"t": t, "consumption": c, "residual": res, "coefficient": config.coefficient(t)?}));
        rows.push([t, res]);
    }
    let max = rows.iter().fold(0.0f64, |m, r| m.max(r[1].abs()));
    Ok(Outcome {
        results: json!({
            "capital": w.label(),
            "utility": config.utility().label(),
            "max_residual": max,
            "points": points,
        }),
        diagnostics: Diagnostics {
            truncation_index,
            ..Diagnostics::default()
        },
        rows,
    })
}
