mod jobs;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use qomega::calculus::{builtins, IntegrationConfig, RealFunction};
use qomega::{Error, QOmegaParams};
use serde::Serialize;
use serde_json::Value;

use jobs::Outcome;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hahn quantum calculus: operators, variational checks and the Ramsey model.
#[derive(Debug, Parser)]
#[command(name = "qomega", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// D_{q,w} f at one or more points, or on a truncated lattice of [a, b].
    Deriv {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        function: FunctionArgs,
        /// Evaluation points, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Jackson-Norlund integral of f over [a, b].
    Integral {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// The q,w-exponential E(z, t).
    Exp {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Euler-Lagrange residual of a candidate for a fixture's functional.
    ElCheck {
        #[command(flatten)]
        fixture: FixtureArgs,
        /// Candidate path; defaults to the fixture's known solution.
        #[command(flatten)]
        function: FunctionArgs,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Direct minimization of a fixture's functional on a truncated lattice.
    Solve {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Gauge identity and invariance checks for a fixture.
    LeitmannCheck {
        #[command(flatten)]
        fixture: FixtureArgs,
        /// Transformation parameters for the control fixture.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Consumption and Euler-Lagrange residual of a capital path W on [0, T].
    Ramsey {
        #[command(flatten)]
        params: ParamArgs,
        /// Capital path W.
        #[command(flatten)]
        function: FunctionArgs,
        /// Discount rate.
        #[arg(long)]
        p: f64,
        /// Rate of yield.
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[arg(long, default_value = "1")]
        horizon: f64,
        #[arg(long, value_enum, default_value = "log")]
        utility: UtilityName,
        #[command(flatten)]
        numerics: NumericArgs,
    },
    /// Lists the worked problems, or runs a check on one of them.
    Fixtures {
        #[command(flatten)]
        fixture: OptionalFixtureArgs,
        #[arg(long, value_enum, default_value = "el")]
        check: Check,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[command(flatten)]
        numerics: NumericArgs,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    q: f64,
    #[arg(long)]
    omega: f64,
}

#[derive(Debug, Args)]
struct FunctionArgs {
    /// Polynomial coefficients c0,c1,... of sum c_i t^i.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    /// Named function: piecewise_jump, half_square_plus_one, exp, sin.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long)]
    name: String,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct OptionalFixtureArgs {
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct NumericArgs {
    /// Relative truncation tolerance of series and products.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// Lattice depth.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    El,
    Solve,
    Leitmann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UtilityName {
    Log,
    Quadratic,
}

#[derive(Debug, Serialize)]
struct Report {
    inputs: BTreeMap<String, Value>,
    results: Value,
    diagnostics: jobs::Diagnostics,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct ErrorReport {
    inputs: BTreeMap<String, Value>,
    error: ErrorBody,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
    numerical: bool,
}

impl NumericArgs {
    fn config(&self) -> qomega::Result<IntegrationConfig> {
        let mut cfg = IntegrationConfig::default();
        if let Some(tol) = self.tol {
            cfg.rel_tol = tol;
            cfg.abs_tol = cfg.abs_tol.min(tol);
        }
        if let Some(n) = self.max_terms {
            cfg.max_terms = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ParamArgs {
    fn build(&self) -> qomega::Result<QOmegaParams> {
        QOmegaParams::new(self.q, self.omega)
    }
}

impl FunctionArgs {
    fn build(&self) -> qomega::Result<Option<RealFunction>> {
        match (&self.poly, &self.builtin) {
            (Some(_), Some(_)) => Err(Error::InvalidParams("give either --poly or --builtin, not both".into())),
            (Some(p), None) => parse_poly(p).map(Some),
            (None, Some(name)) => builtins::by_name(name)
                .map(Some)
                .ok_or_else(|| Error::InvalidParams(format!("unknown builtin `{name}`"))),
            (None, None) => Ok(None),
        }
    }

    fn require(&self) -> qomega::Result<RealFunction> {
        self.build()?
            .ok_or_else(|| Error::InvalidParams("a function is required: --poly or --builtin".into()))
    }
}

fn parse_poly(s: &str) -> qomega::Result<RealFunction> {
    let coeffs = s
        .split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidParams(format!("bad polynomial coefficient `{c}`")))
        })
        .collect::<qomega::Result<Vec<f64>>>()?;
    Ok(RealFunction::polynomial(&coeffs))
}

/// Every argument as it arrived on the command line (defaults included).
fn echo_inputs(command: &str, matches: &ArgMatches) -> BTreeMap<String, Value> {
    let mut inputs = BTreeMap::new();
    inputs.insert("command".to_string(), Value::String(command.to_string()));
    let cli = Cli::command();
    let Some(sub) = cli.find_subcommand(command) else {
        return inputs;
    };
    // flattened structs register argument groups under the same ids
    for id in matches
        .ids()
        .filter(|id| sub.get_arguments().any(|a| a.get_id() == *id))
    {
        let Ok(Some(raw)) = matches.try_get_raw(id.as_str()) else {
            continue;
        };
        let vals: Vec<Value> = raw.map(|v| Value::String(v.to_string_lossy().into_owned())).collect();
        let value = if vals.len() == 1 {
            vals.into_iter().next().unwrap()
        } else {
            Value::Array(vals)
        };
        inputs.insert(id.as_str().replace('_', "-"), value);
    }
    inputs
}

fn dispatch(command: &Command) -> qomega::Result<(Outcome, Format)> {
    match command {
        Command::Deriv {
            params,
            function,
            t,
            a,
            b,
            numerics,
        } => {
            let out = jobs::deriv(&params.build()?, &function.require()?, t, *a, *b, numerics.depth)?;
            Ok((out, numerics.format))
        }
        Command::Integral {
            params,
            function,
            a,
            b,
            numerics,
        } => {
            let out = jobs::integral(&params.build()?, &function.require()?, *a, *b, &numerics.config()?)?;
            Ok((out, numerics.format))
        }
        Command::Exp { params, z, t, numerics } => Ok((
            jobs::exp(&params.build()?, *z, *t, &numerics.config()?)?,
            numerics.format,
        )),
        Command::ElCheck {
            fixture,
            function,
            numerics,
        } => {
            let fx = jobs::load_fixture(&fixture.name, &fixture.overrides, numerics.depth)?;
            let out = jobs::el_check(&fx, function.build()?.as_ref(), numerics.depth)?;
            Ok((out, numerics.format))
        }
        Command::Solve { fixture, numerics } => {
            let fx = jobs::load_fixture(&fixture.name, &fixture.overrides, numerics.depth)?;
            Ok((jobs::solve(&fx, numerics.depth, &numerics.config()?)?, numerics.format))
        }
        Command::LeitmannCheck { fixture, s, numerics } => {
            let fx = jobs::load_fixture(&fixture.name, &fixture.overrides, numerics.depth)?;
            Ok((
                jobs::leitmann(&fx, s, numerics.depth, &numerics.config()?)?,
                numerics.format,
            ))
        }
        Command::Ramsey {
            params,
            function,
            p,
            r,
            horizon,
            utility,
            numerics,
        } => {
            let utility = match utility {
                UtilityName::Log => qomega::models::Utility::log(),
                UtilityName::Quadratic => qomega::models::Utility::quadratic(),
            };
            let w = function.require()?;
            let out = jobs::ramsey(
                params.build()?,
                &w,
                *p,
                *r,
                *horizon,
                utility,
                numerics.depth,
                &numerics.config()?,
            )?;
            Ok((out, numerics.format))
        }
        Command::Fixtures {
            fixture,
            check,
            s,
            numerics,
        } => {
            let Some(name) = &fixture.name else {
                return Ok((jobs::list_fixtures()?, numerics.format));
            };
            let fx = jobs::load_fixture(name, &fixture.overrides, numerics.depth)?;
            let out = match check {
                Check::El => jobs::el_check(&fx, None, numerics.depth)?,
                Check::Solve => jobs::solve(&fx, numerics.depth, &numerics.config()?)?,
                Check::Leitmann => jobs::leitmann(&fx, s, numerics.depth, &numerics.config()?)?,
            };
            Ok((out, numerics.format))
        }
    }
}

fn write_csv(rows: &[[f64; 2]]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["point", "value"])?;
    for [t, v] in rows {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()
}

fn print_json<T: Serialize>(value: &T) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let inputs = echo_inputs(name, sub);

    let written = match dispatch(&cli.command) {
        Ok((out, Format::Csv)) => write_csv(&out.rows).map(|_| ExitCode::SUCCESS),
        Ok((out, Format::Json)) => print_json(&Report {
            inputs,
            results: out.results,
            diagnostics: out.diagnostics,
            version: VERSION,
        })
        .map(|_| ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_numerical() { 3 } else { 2 };
            print_json(&ErrorReport {
                inputs,
                error: ErrorBody {
                    kind: e.kind(),
                    message: e.to_string(),
                    numerical: e.is_numerical(),
                },
                version: VERSION,
            })
            .map(|_| ExitCode::from(code))
        }
    };
    match written {
        Ok(code) => code,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::FAILURE
        }
    }
}
