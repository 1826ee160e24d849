//! Command-line arguments and their translation into a [`RunConfig`].

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use sharpquad::suite::{AuditCase, SuiteKind};
use sharpquad::{ClassSpec, Exponent, Interval, ModulusSpec, PiecewisePolynomial, WeightSystem};

use crate::config::{Format, NodePolicy, OutputSpec, Problem, RunConfig, Task};

const KERNEL_HELP: &str = "\
CSV output (--format csv, or the --samples file) has the columns
  s  sample point, 512 equispaced points from a to b
  r  value of the last kernel r_x^n at s (left limit at breakpoints)";

const BOUND_HELP: &str = "\
CSV output is available with --sweep and has the columns
  x         node on the equispaced grid
  constant  sharp constant with the node at x";

const P_HELP: &str = "const:C, poly:C0,C1,..., inline JSON {\"breakpoints\":..,\"pieces\":..} or a JSON file";

const WEIGHTS_HELP: &str =
    "JSON list of piecewise polynomials, a file holding one, or ';'-separated const:/poly: items";

#[derive(Debug, Parser)]
#[command(name = "sharpquad", version, about = "Sharp error constants for one-point weighted recovery formulas")]
pub struct Cli {
    /// Run the canonical JSON configuration in FILE instead of a subcommand.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the canonical configuration and exit without running it.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Output format: json or csv.
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<Format>,

    /// Write output to PATH instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Seed for randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Weight function p.
    #[arg(long, default_value = "const:1", help = P_HELP)]
    pub p: String,

    /// Integration interval; defaults to the domain of a JSON p, else [0, 1].
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,

    /// Order n.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel chain r_x^0, ..., r_x^n as JSON, or samples of r_x^n as CSV.
    #[command(after_help = KERNEL_HELP)]
    Kernel {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Node x.
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, help = WEIGHTS_HELP)]
        weights: Option<String>,
        /// Also write the CSV samples to this file.
        #[arg(long, value_name = "PATH")]
        samples: Option<PathBuf>,
    },
    /// Sharp constant over W^n_q, or over D^n_q when weights are given.
    #[command(after_help = BOUND_HELP)]
    Bound {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Exponent q: a number in [1, inf) or "inf".
        #[arg(long)]
        q: Exponent,
        /// Fixed node.
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Minimize the constant over the node.
        #[arg(long)]
        optimize: bool,
        /// Constant at GRID + 1 equispaced nodes, endpoints included.
        #[arg(long, value_name = "GRID")]
        sweep: Option<usize>,
        #[arg(long, help = WEIGHTS_HELP)]
        weights: Option<String>,
    },
    /// Sharp constant over W^n H^omega (odd n) at the balancing node.
    Holder {
        #[command(flatten)]
        problem: ProblemArgs,
        /// linear:K, power:K:ALPHA or table:FILE (JSON pairs, or CSV lines u,omega).
        #[arg(long)]
        omega: String,
        /// Check that x is a balancing node and use it.
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Use the balancing node (the default).
        #[arg(long)]
        balance: bool,
    },
    /// Constant of the cube inequality in dimension d.
    Cube {
        #[arg(long)]
        d: usize,
        /// Exponent q > d, or "inf".
        #[arg(long)]
        q: Exponent,
    },
    /// Ball mean-value bound for total variation V.
    BallBv {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
    },
    /// Run verification suites; exit code 0 iff every contract passes.
    Verify {
        /// Suite to run: representation, moments, extremal, audit or all.
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: SuiteKind,
        /// Audit trials per case.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Audit case(s) replacing the default matrix: JSON object or list, inline or a file.
        #[arg(long)]
        spec: Option<String>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        other => Err(format!("unknown format {other:?}; expected json or csv")),
    }
}

fn parse_suite(s: &str) -> Result<SuiteKind, String> {
    s.parse().map_err(|e: sharpquad::Error| e.to_string())
}

fn looks_like_json(s: &str) -> bool {
    matches!(s.trim_start().chars().next(), Some('{' | '['))
}

/// Inline JSON, or the contents of the named file.
fn json_or_file<T: DeserializeOwned>(key: &str, s: &str) -> Result<T> {
    let text = if looks_like_json(s) {
        s.to_string()
    } else {
        fs::read_to_string(s).with_context(|| format!("{key}: cannot read {s:?}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("{key}: malformed JSON"))
}

fn parse_numbers(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|c| c.trim().parse::<f64>().with_context(|| format!("{key}: {c:?} is not a number"))).collect()
}

fn parse_pp(key: &str, s: &str, interval: Option<Interval>) -> Result<PiecewisePolynomial> {
    let domain = interval.unwrap_or_else(Interval::unit);
    let built = if let Some(c) = s.strip_prefix("const:") {
        let c = c.trim().parse::<f64>().with_context(|| format!("{key}: {c:?} is not a number"))?;
        PiecewisePolynomial::polynomial(domain, vec![c])
    } else if let Some(cs) = s.strip_prefix("poly:") {
        PiecewisePolynomial::polynomial(domain, parse_numbers(key, cs)?)
    } else {
        return json_or_file(key, s);
    };
    built.with_context(|| format!("{key}: invalid piecewise polynomial"))
}

fn parse_interval(raw: &Option<Vec<f64>>) -> Result<Option<Interval>> {
    match raw.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some(Interval::new(a, b).context("interval: need a < b")?)),
        Some(_) => bail!("interval: expected two numbers A B"),
    }
}

fn parse_weights(s: &str, interval: Interval) -> Result<WeightSystem> {
    let list: Vec<PiecewisePolynomial> = if looks_like_json(s) || !(s.contains(';') || s.contains(':')) {
        json_or_file("weights", s)?
    } else {
        s.split(';').map(|item| parse_pp("weights", item.trim(), Some(interval))).collect::<Result<_>>()?
    };
    WeightSystem::new(interval, list).context("weights")
}

fn parse_omega(s: &str) -> Result<ModulusSpec> {
    let parts: Vec<&str> = s.splitn(2, ':').collect();
    let number = |t: &str| t.trim().parse::<f64>().with_context(|| format!("omega: {t:?} is not a number"));
    let spec = match parts.as_slice() {
        ["linear", k] => ModulusSpec::linear(number(k)?),
        ["power", rest] => {
            let Some((k, alpha)) = rest.split_once(':') else {
                bail!("omega: expected power:K:ALPHA");
            };
            ModulusSpec::power(number(k)?, number(alpha)?)
        }
        ["table", file] => return read_table(file),
        _ => bail!("omega: expected linear:K, power:K:ALPHA or table:FILE, got {s:?}"),
    };
    spec.context("omega")
}

/// Table moduli are marked concave when they pass the concavity check.
fn read_table(file: &str) -> Result<ModulusSpec> {
    let text = fs::read_to_string(file).with_context(|| format!("omega: cannot read {file:?}"))?;
    let points: Vec<(f64, f64)> = if looks_like_json(&text) {
        serde_json::from_str(&text).context("omega: malformed JSON table")?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter(|l| l.split(',').next().is_some_and(|c| c.trim().parse::<f64>().is_ok()))
            .map(|l| match parse_numbers("omega", l)?.as_slice() {
                &[u, w] => Ok((u, w)),
                _ => bail!("omega: expected two columns u,omega in {l:?}"),
            })
            .collect::<Result<_>>()?
    };
    let span = points.last().map_or(1.0, |p| p.0.max(1.0));
    let concave = ModulusSpec::table(points.clone(), true).context("omega")?;
    if concave.validate(span).is_ok() {
        Ok(concave)
    } else {
        ModulusSpec::table(points, false).context("omega")
    }
}

struct Resolved {
    p: PiecewisePolynomial,
    interval: Interval,
}

fn resolve(problem: &ProblemArgs) -> Result<Resolved> {
    let interval = parse_interval(&problem.interval)?;
    let p = parse_pp("p", &problem.p, interval)?;
    Ok(Resolved { interval: interval.unwrap_or(p.domain()), p })
}

fn require_n(problem: &ProblemArgs) -> Result<usize> {
    problem.n.context("n: --n is required")
}

impl Cli {
    /// The validated configuration described by these arguments.
    pub fn into_config(self) -> Result<RunConfig> {
        let config = match (self.config, self.command) {
            (Some(path), None) => {
                let text = fs::read_to_string(&path).with_context(|| format!("config: cannot read {path:?}"))?;
                let mut config: RunConfig = serde_json::from_str(&text).context("config: malformed JSON")?;
                if let Some(format) = self.format {
                    config.output.format = format;
                }
                if self.output.is_some() {
                    config.output.path = self.output;
                }
                if self.seed.is_some() {
                    config.seed = self.seed;
                }
                config
            }
            (None, Some(command)) => RunConfig {
                task: command.into_task()?,
                output: OutputSpec { format: self.format.unwrap_or_default(), path: self.output },
                seed: self.seed,
            },
            (None, None) => bail!("command: give a subcommand or --config FILE"),
            (Some(_), Some(_)) => bail!("config: --config cannot be combined with a subcommand"),
        };
        config.validate()?;
        Ok(config)
    }
}

impl Command {
    fn into_task(self) -> Result<Task> {
        Ok(match self {
            Command::Kernel { problem, x, weights, samples } => {
                let r = resolve(&problem)?;
                let n = require_n(&problem)?;
                let weights = weights.map(|w| parse_weights(&w, r.interval)).transpose()?;
                Task::Kernel { p: r.p, interval: r.interval, n, x, weights, samples }
            }
            Command::Bound { problem, q, x, optimize, sweep, weights } => {
                let r = resolve(&problem)?;
                let policies = x.is_some() as usize + optimize as usize + sweep.is_some() as usize;
                if policies != 1 {
                    bail!("node: exactly one node policy (--x, --optimize or --sweep) must be given");
                }
                let node = match (x, sweep) {
                    (Some(x), _) => NodePolicy::Fixed { x },
                    (_, Some(grid)) => NodePolicy::Sweep { grid },
                    _ => NodePolicy::Optimize,
                };
                let class = match weights {
                    Some(w) => {
                        let mut weights = parse_weights(&w, r.interval)?;
                        if let Some(n) = problem.n {
                            if n == 0 || n > weights.len() {
                                bail!("n: must lie in 1..={} for the given weights", weights.len());
                            }
                            weights = weights.truncate(n)?;
                        }
                        ClassSpec::WeightedOperator { weights, q }
                    }
                    None => ClassSpec::Sobolev { n: require_n(&problem)?, q },
                };
                Task::Bound(Problem { p: r.p, interval: r.interval, class, node })
            }
            Command::Holder { problem, omega, x, balance } => {
                let r = resolve(&problem)?;
                let n = require_n(&problem)?;
                if n % 2 == 0 {
                    bail!("n: n must be odd for Hölder classes (got {n})");
                }
                let node = match (x, balance) {
                    (Some(_), true) => bail!("node: exactly one node policy (--x or --balance) must be given"),
                    (Some(x), false) => NodePolicy::Fixed { x },
                    (None, _) => NodePolicy::Balance,
                };
                let class = ClassSpec::Holder { n, modulus: parse_omega(&omega)? };
                Task::Holder(Problem { p: r.p, interval: r.interval, class, node })
            }
            Command::Cube { d, q } => Task::Cube { d, q },
            Command::BallBv { v } => Task::BallBv { v },
            Command::Verify { suite, trials, spec } => {
                let cases = spec
                    .map(|s| -> Result<Vec<AuditCase>> {
                        let value: serde_json::Value = json_or_file("spec", &s)?;
                        let cases = if value.is_array() {
                            serde_json::from_value(value)
                        } else {
                            serde_json::from_value(value).map(|c| vec![c])
                        };
                        cases.context("spec: malformed audit case")
                    })
                    .transpose()?;
                Task::Verify { suite, trials, cases }
            }
        })
    }
}

/// Parses `argv` (program name first) into a validated configuration.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)?.into_config()
}
