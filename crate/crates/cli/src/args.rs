//! Command-line flags, TOML config files and per-subcommand validation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Deserialize;
use tangentflow::suites::Suite;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tangentflow",
    version,
    about = "Flows, brackets and law checks for vector fields on ℝⁿ"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a dynamical system from an initial state.
    Solve(Flags),
    /// Evaluate the flow of a vector field or of a linear field given by a matrix.
    Flow(Flags),
    /// Evaluate the Lie bracket of two fields.
    Bracket(Flags),
    /// Check the commuting-flows theorem for two fields.
    Commute(Flags),
    /// Matrix exponential of t·A.
    Expm(Flags),
    /// Integrate geodesics of a connection given by Christoffel symbols.
    Geodesic(Flags),
    /// Evaluate e or an exponential flow on a trivial bundle.
    Exp(Flags),
    /// Run a law suite and write its report.
    Verify(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Flow(_) => "flow",
            Command::Bracket(_) => "bracket",
            Command::Commute(_) => "commute",
            Command::Expm(_) => "expm",
            Command::Geodesic(_) => "geodesic",
            Command::Exp(_) => "exp",
            Command::Verify(_) => "verify",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Solve(f)
            | Command::Flow(f)
            | Command::Bracket(f)
            | Command::Commute(f)
            | Command::Expm(f)
            | Command::Geodesic(f)
            | Command::Exp(f)
            | Command::Verify(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

/// Flags shared by every subcommand. Each subcommand accepts a subset.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Dimension n of the state space ℝⁿ.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Vector field components, `;`-separated, over x1..xn (and t).
    #[arg(long, allow_hyphen_values = true)]
    pub vf: Option<String>,
    /// Second vector field for bracket and commute.
    #[arg(long, allow_hyphen_values = true)]
    pub vf2: Option<String>,
    /// The field may use the time variable t.
    #[arg(long)]
    #[serde(default)]
    pub time_dependent: bool,
    /// Final time (solve, flow, geodesic, exp) or time scale (expm, commute).
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Initial state as a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Number of evenly spaced output times from 0 to t.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Integrator tolerance, or law tolerance for bracket, commute and verify.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for sample generation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Order of the system for solve.
    #[arg(long)]
    pub order: Option<u32>,
    /// Square matrix, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Christoffel map components over x1..xn and u1..un.
    #[arg(long, allow_hyphen_values = true)]
    pub christoffel: Option<String>,
    /// Base dimension of the trivial bundle for exp.
    #[arg(long)]
    pub base_dim: Option<usize>,
    /// Fibre dimension of the trivial bundle for exp.
    #[arg(long)]
    pub fibre_dim: Option<usize>,
    /// Also report the bracket as a matrix when it is linear.
    #[arg(long)]
    #[serde(default)]
    pub as_matrix: bool,
    /// Sample count for law checks.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Law suite for verify.
    #[arg(long, value_parser = parse_suite)]
    #[serde(default, deserialize_with = "suite_from_str")]
    pub suite: Option<Suite>,
    /// TOML file whose keys supply flags not given on the command line.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn suite_from_str<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Suite>, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

macro_rules! or_file {
    ($cli:expr, $file:expr, [$($opt:ident),*], [$($flag:ident),*]) => {
        Flags {
            $($opt: $cli.$opt.clone().or($file.$opt),)*
            $($flag: $cli.$flag || $file.$flag,)*
            config: $cli.config.clone(),
        }
    };
}

impl Flags {
    /// Fills unset flags from the `--config` file, if any.
    pub fn resolve(&self) -> Result<Flags, CliError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let file = read_config(path)?;
        Ok(or_file!(
            self,
            file,
            [
                dim,
                vf,
                vf2,
                t,
                x0,
                grid,
                tol,
                seed,
                out,
                format,
                order,
                matrix,
                christoffel,
                base_dim,
                fibre_dim,
                samples,
                suite
            ],
            [time_dependent, as_matrix]
        ))
    }

    /// Names of the flags that are set.
    pub fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! check {
            ($($field:ident => $name:literal),*) => {
                $(if self.$field.is_some() { out.push($name); })*
            };
        }
        check!(
            dim => "--dim", vf => "--vf", vf2 => "--vf2", t => "--t", x0 => "--x0",
            grid => "--grid", tol => "--tol", seed => "--seed", out => "--out",
            format => "--format", order => "--order", matrix => "--matrix",
            christoffel => "--christoffel", base_dim => "--base-dim",
            fibre_dim => "--fibre-dim", samples => "--samples", suite => "--suite"
        );
        if self.time_dependent {
            out.push("--time-dependent");
        }
        if self.as_matrix {
            out.push("--as-matrix");
        }
        out
    }
}

fn read_config(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read --config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid --config {}: {e}", path.display())))
}

const COMMON: [&str; 3] = ["--seed", "--out", "--format"];

/// Flags accepted by each subcommand besides `--seed`, `--out`, `--format`.
fn accepted(command: &str) -> &'static [&'static str] {
    match command {
        "solve" => &[
            "--dim",
            "--vf",
            "--time-dependent",
            "--t",
            "--x0",
            "--grid",
            "--tol",
            "--order",
        ],
        "flow" => &[
            "--dim", "--vf", "--matrix", "--t", "--x0", "--grid", "--tol",
        ],
        "bracket" => &[
            "--dim",
            "--vf",
            "--vf2",
            "--x0",
            "--tol",
            "--as-matrix",
            "--samples",
        ],
        "commute" => &["--dim", "--vf", "--vf2", "--t", "--tol", "--samples"],
        "expm" => &["--matrix", "--t"],
        "geodesic" => &["--dim", "--christoffel", "--x0", "--t", "--grid", "--tol"],
        "exp" => &["--t", "--x0", "--base-dim", "--fibre-dim", "--tol"],
        "verify" => &["--suite", "--tol", "--samples"],
        _ => &[],
    }
}

fn csv_capable(command: &str) -> bool {
    matches!(command, "solve" | "flow" | "geodesic" | "expm")
}

/// Rejects flags that the subcommand does not use.
pub fn validate(command: &str, flags: &Flags) -> Result<(), CliError> {
    let allowed = accepted(command);
    for flag in flags.present() {
        if !COMMON.contains(&flag) && !allowed.contains(&flag) {
            return Err(CliError::Usage(format!(
                "{flag} is not accepted by {command}"
            )));
        }
    }
    if flags.format == Some(Format::Csv) && !csv_capable(command) {
        return Err(CliError::Usage(format!(
            "--format csv is not supported by {command}"
        )));
    }
    if flags.grid == Some(0) {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    if let Some(tol) = flags.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {tol}"
            )));
        }
    }
    if let Some(t) = flags.t {
        if !t.is_finite() {
            return Err(CliError::Usage(format!("--t must be finite, got {t}")));
        }
    }
    Ok(())
}

pub fn require<'a, T>(value: &'a Option<T>, flag: &str, command: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{flag} is required for {command}")))
}

pub fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("invalid {flag}: `{}` is not a number", s.trim()))
            })
        })
        .collect()
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|r| parse_list(r, "--matrix"))
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Usage(format!(
            "--matrix must be square, got {n} rows of lengths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
