//! Subcommand implementations. Each returns the text to emit and whether
//! every checked law passed.

use nalgebra::DMatrix;
use serde_json::{json, Value};
use tangentflow::dsl::{self, FieldSpec};
use tangentflow::dynamics::{
    augment_time, commuting_flows_check, expm, flow_of, geodesic_flow, integrate, linear_flow,
    solve_nth_order, Connection, DynamicalSystem, Flow, HigherOrderSystem, IntegratorConfig,
};
use tangentflow::report::{LawResult, Report};
use tangentflow::rig::{e_map, exp_flow};
use tangentflow::sampling::{uniform_points, DEFAULT_SEED, LAW_SAMPLES, NUMERIC_TOL};
use tangentflow::suites::{suite_report, Suite, SuiteConfig};
use tangentflow::vector_fields::{lie_bracket, matrix_of, VectorField};
use tangentflow::{Error, SmoothMap, TrivialBundle};

use crate::args::{parse_list, parse_matrix, require, Flags, Format};
use crate::CliError;

/// Output rows when `--format csv` is given without `--grid`.
const DEFAULT_GRID: usize = 11;
/// Linearity tolerance for `bracket --as-matrix`.
const MATRIX_TOL: f64 = 1e-9;

pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn json(value: &Value) -> Self {
        Outcome {
            text: serde_json::to_string_pretty(value).expect("json value serializes"),
            passed: true,
        }
    }

    fn report(report: &Report) -> Self {
        Outcome {
            text: report.to_json(),
            passed: report.all_passed(),
        }
    }
}

pub fn run(command: &str, f: &Flags) -> Result<Outcome, CliError> {
    match command {
        "solve" => solve(f),
        "flow" => flow(f),
        "bracket" => bracket(f),
        "commute" => commute(f),
        "expm" => matrix_exponential(f),
        "geodesic" => geodesic(f),
        "exp" => exponential(f),
        "verify" => verify(f),
        other => Err(CliError::Usage(format!("unknown subcommand {other}"))),
    }
}

fn integrator(f: &Flags) -> IntegratorConfig {
    f.tol.map(IntegratorConfig::rk45).unwrap_or_default()
}

fn seed(f: &Flags) -> u64 {
    f.seed.unwrap_or(DEFAULT_SEED)
}

/// Parses `text` as the value of `flag`, with `components` entries.
fn spec(
    text: &str,
    flag: &str,
    arity: usize,
    time_dependent: bool,
    components: &[usize],
) -> Result<FieldSpec, CliError> {
    let s = dsl::parse(text, arity, time_dependent)
        .map_err(|e| CliError::Usage(format!("invalid {flag}: {e}")))?;
    if !components.contains(&s.len()) {
        let want: Vec<String> = components.iter().map(usize::to_string).collect();
        return Err(CliError::Usage(format!(
            "{flag} has {} components, expected {}",
            s.len(),
            want.join(" or ")
        )));
    }
    Ok(s)
}

fn field(text: &str, flag: &str, n: usize) -> Result<VectorField, CliError> {
    Ok(VectorField::new(dsl::compile(&spec(
        text,
        flag,
        n,
        false,
        &[n],
    )?))?)
}

fn point(f: &Flags, len: usize, command: &str) -> Result<Vec<f64>, CliError> {
    let x0 = parse_list(require(&f.x0, "--x0", command)?, "--x0")?;
    if x0.len() != len {
        return Err(CliError::Usage(format!(
            "--x0 has {} entries, expected {len}",
            x0.len()
        )));
    }
    Ok(x0)
}

fn linspace(t: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t];
    }
    let mut out: Vec<f64> = (0..count)
        .map(|k| t * k as f64 / (count - 1) as f64)
        .collect();
    out[count - 1] = t;
    out
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn csv_line(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(dsl::format_number)
        .collect::<Vec<_>>()
        .join(",")
}

/// Final-state JSON, or a CSV trajectory at `--grid` times from 0 to `t`.
fn trajectory(
    f: &Flags,
    t: f64,
    dim: usize,
    state_at: impl Fn(f64) -> tangentflow::Result<Vec<f64>>,
) -> Result<Outcome, CliError> {
    match f.format.unwrap_or(Format::Json) {
        Format::Json => {
            let x = state_at(t)?;
            let mut value = json!({ "t": t, "x": x });
            if let Some(grid) = f.grid {
                let steps = linspace(t, grid)
                    .into_iter()
                    .map(|s| Ok(json!({ "t": s, "x": state_at(s)? })))
                    .collect::<Result<Vec<Value>, CliError>>()?;
                value["trajectory"] = Value::Array(steps);
            }
            Ok(Outcome::json(&value))
        }
        Format::Csv => {
            let mut lines = vec![std::iter::once("t".to_string())
                .chain((1..=dim).map(|i| format!("x{i}")))
                .collect::<Vec<_>>()
                .join(",")];
            for s in linspace(t, f.grid.unwrap_or(DEFAULT_GRID)) {
                let x = state_at(s)?;
                lines.push(csv_line(std::iter::once(s).chain(x)));
            }
            Ok(Outcome {
                text: lines.join("\n"),
                passed: true,
            })
        }
    }
}

fn solve(f: &Flags) -> Result<Outcome, CliError> {
    let n = *require(&f.dim, "--dim", "solve")?;
    let text = require(&f.vf, "--vf", "solve")?;
    let t = *require(&f.t, "--t", "solve")?;
    let cfg = integrator(f);
    match (f.order.unwrap_or(1), f.time_dependent) {
        (0, _) => Err(CliError::Usage("--order must be at least 1".into())),
        (1, false) => {
            let sys = DynamicalSystem::autonomous(field(text, "--vf", n)?);
            let x0 = point(f, n, "solve")?;
            trajectory(f, t, n, |s| integrate(&sys, s, &x0, &cfg))
        }
        (1, true) => {
            let sys = augment_time(&spec(text, "--vf", n, true, &[n])?)?;
            let x0 = point(f, n, "solve")?;
            trajectory(f, t, n, |s| {
                let mut y = integrate(&sys, s, &x0, &cfg)?;
                y.truncate(n);
                Ok(y)
            })
        }
        (_, true) => Err(CliError::Usage(
            "--time-dependent is only supported with --order 1".into(),
        )),
        (k, false) => {
            let lower = n << (k - 1);
            let accel = if k == 2 {
                vec![n, 2 * lower]
            } else {
                vec![2 * lower]
            };
            let s = spec(text, "--vf", lower, false, &accel)?;
            let init = SmoothMap::constant(0, point(f, lower, "solve")?);
            let sys = if s.len() == n {
                HigherOrderSystem::from_acceleration(n, dsl::compile(&s), init)?
            } else {
                HigherOrderSystem::new(n, k, dsl::compile(&s), init)?
            };
            trajectory(f, t, n, |s| solve_nth_order(&sys, s, &[], &cfg))
        }
    }
}

fn flow(f: &Flags) -> Result<Outcome, CliError> {
    let t = *require(&f.t, "--t", "flow")?;
    let (flow, n): (Flow, usize) = match (&f.vf, &f.matrix) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--vf and --matrix are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "--vf or --matrix is required for flow".into(),
            ))
        }
        (Some(text), None) => {
            let n = *require(&f.dim, "--dim", "flow")?;
            (flow_of(&field(text, "--vf", n)?, &integrator(f)), n)
        }
        (None, Some(text)) => {
            let a = parse_matrix(text)?;
            let n = a.nrows();
            if f.dim.is_some_and(|d| d != n) {
                return Err(CliError::Usage(format!(
                    "--dim {} does not match the {n}×{n} --matrix",
                    f.dim.unwrap_or_default()
                )));
            }
            (linear_flow(&a)?, n)
        }
    };
    let x0 = point(f, n, "flow")?;
    trajectory(f, t, n, |s| flow.eval(s, &x0))
}

fn bracket(f: &Flags) -> Result<Outcome, CliError> {
    let n = *require(&f.dim, "--dim", "bracket")?;
    let v1 = field(require(&f.vf, "--vf", "bracket")?, "--vf", n)?;
    let v2 = field(require(&f.vf2, "--vf2", "bracket")?, "--vf2", n)?;
    if f.x0.is_none() && !f.as_matrix {
        return Err(CliError::Usage(
            "--x0 or --as-matrix is required for bracket".into(),
        ));
    }
    let b = lie_bracket(&v1, &v2)?;
    let mut value = json!({ "dim": n });
    if f.x0.is_some() {
        let x0 = point(f, n, "bracket")?;
        value["x0"] = json!(x0);
        value["bracket"] = json!(b.eval(&x0)?);
    }
    if f.as_matrix {
        let pts = uniform_points(seed(f), f.samples.unwrap_or(LAW_SAMPLES), n, -2.0, 2.0);
        match matrix_of(&b, &pts, f.tol.unwrap_or(MATRIX_TOL)) {
            Ok(m) => value["matrix"] = json!(rows(&m)),
            Err(Error::Linearity {
                max_residual,
                witness,
            }) => {
                value["matrix"] = Value::Null;
                value["linearity_residual"] = json!(max_residual);
                value["linearity_witness"] = json!(witness);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::json(&value))
}

fn commute(f: &Flags) -> Result<Outcome, CliError> {
    let n = *require(&f.dim, "--dim", "commute")?;
    let text1 = require(&f.vf, "--vf", "commute")?;
    let text2 = require(&f.vf2, "--vf2", "commute")?;
    let (v1, v2) = (field(text1, "--vf", n)?, field(text2, "--vf2", n)?);
    let tol = f.tol.unwrap_or(NUMERIC_TOL);
    let t = f.t.unwrap_or(1.0);
    let times = [-t, -t / 2.0, t / 2.0, t];
    let pts = uniform_points(seed(f), f.samples.unwrap_or(LAW_SAMPLES), n, -2.0, 2.0);
    let r = commuting_flows_check(&v1, &v2, &pts, &times, tol, &IntegratorConfig::default())?;
    let theorem = r
        .flows_commute
        .and(&r.fields_commute)
        .and(&r.v1_invariant_under_flow2)
        .and(&r.v2_invariant_under_flow1);
    let config = json!({
        "dim": n,
        "vf": text1,
        "vf2": text2,
        "tol": tol,
        "times": times,
        "samples": pts.len(),
        "predicates": r,
    });
    let report = Report::new(
        seed(f),
        config,
        &[LawResult::new("flow-commuting-theorem", theorem)],
    );
    Ok(Outcome::report(&report))
}

fn matrix_exponential(f: &Flags) -> Result<Outcome, CliError> {
    let a = parse_matrix(require(&f.matrix, "--matrix", "expm")?)?;
    let e = expm(&(a * f.t.unwrap_or(1.0)))?;
    match f.format.unwrap_or(Format::Json) {
        Format::Json => Ok(Outcome::json(&json!({ "matrix": rows(&e) }))),
        Format::Csv => Ok(Outcome {
            text: rows(&e)
                .into_iter()
                .map(csv_line)
                .collect::<Vec<_>>()
                .join("\n"),
            passed: true,
        }),
    }
}

fn geodesic(f: &Flags) -> Result<Outcome, CliError> {
    let n = *require(&f.dim, "--dim", "geodesic")?;
    let text = require(&f.christoffel, "--christoffel", "geodesic")?;
    let t = *require(&f.t, "--t", "geodesic")?;
    let conn = Connection::from_dsl(text, n).map_err(|e| match e {
        Error::Parse(p) => CliError::Usage(format!("invalid --christoffel: {p}")),
        Error::Shape(s) | Error::InvalidSystem(s) => {
            CliError::Usage(format!("invalid --christoffel: {s}"))
        }
        other => other.into(),
    })?;
    let x0 = point(f, 2 * n, "geodesic")?;
    let flow = geodesic_flow(&conn, &integrator(f));
    trajectory(f, t, 2 * n, |s| flow.eval(s, &x0))
}

fn exponential(f: &Flags) -> Result<Outcome, CliError> {
    let t = *require(&f.t, "--t", "exp")?;
    let cfg = integrator(f);
    if f.x0.is_none() {
        if f.base_dim.is_some() || f.fibre_dim.is_some() {
            return Err(CliError::Usage(
                "--x0 is required for exp on a bundle".into(),
            ));
        }
        let e = e_map(&cfg).eval_f64(&[t])?[0];
        return Ok(Outcome::json(&json!({ "t": t, "e": e })));
    }
    let x0 = parse_list(require(&f.x0, "--x0", "exp")?, "--x0")?;
    let base = f.base_dim.unwrap_or(0);
    let fibre = f.fibre_dim.unwrap_or(x0.len().saturating_sub(base));
    let bundle = TrivialBundle::new(base, fibre);
    if x0.len() != base + fibre {
        return Err(CliError::Usage(format!(
            "--x0 has {} entries, expected {} for --base-dim {base} --fibre-dim {fibre}",
            x0.len(),
            base + fibre
        )));
    }
    let x = exp_flow(bundle, &cfg).eval(t, &x0)?;
    Ok(Outcome::json(&json!({
        "t": t,
        "bundle": { "base_dim": base, "fibre_dim": fibre },
        "x": x,
    })))
}

fn verify(f: &Flags) -> Result<Outcome, CliError> {
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig {
        seed: seed(f),
        numeric_tol: f.tol.unwrap_or(defaults.numeric_tol),
        law_samples: f.samples.unwrap_or(defaults.law_samples),
        ..defaults
    };
    let report = suite_report(f.suite.unwrap_or(Suite::All), &cfg)?;
    Ok(Outcome::report(&report))
}
