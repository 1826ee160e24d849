//! Dispatch of a validated configuration.

use std::fs;

use anyhow::{Context, Result};
use serde::Serialize;
use sharpquad::bounds::{bound_at, bound_balanced, optimize_node, sweep_node};
use sharpquad::holder::holder_bound_at;
use sharpquad::kernel::build_chain;
use sharpquad::multivariate::{ball_bv_bound, cube_constant, CubeSpec};
use sharpquad::suite::run_suite;
use sharpquad::{ClassSpec, Exponent, KernelChain, WeightSystem};

use crate::config::{Format, NodePolicy, Problem, RunConfig, Task, KERNEL_SAMPLES};
use crate::format::{to_csv, to_json};

/// Rendered report and whether every checked contract passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub passed: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, passed: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct SweepPoint {
    x: f64,
    constant: f64,
}

#[derive(Serialize)]
struct HolderOutput {
    x: f64,
    constant: f64,
    sharp: bool,
}

#[derive(Serialize)]
struct CubeOutput {
    d: usize,
    q: Exponent,
    constant: f64,
}

#[derive(Serialize)]
struct BallOutput {
    v: f64,
    bound: f64,
}

fn kernel_csv(chain: &KernelChain) -> String {
    let r = chain.last();
    let rows = chain.domain().grid(KERNEL_SAMPLES - 1).into_iter().map(|s| vec![s, r.value(s)]);
    to_csv(&["s", "r"], rows)
}

fn run_problem(problem: &Problem, format: Format) -> Result<String> {
    let Problem { p, class, node, .. } = problem;
    match (class, node) {
        (ClassSpec::Holder { n, modulus }, NodePolicy::Fixed { x }) => {
            let report = holder_bound_at(p, *n, modulus, *x).context("holder")?;
            Ok(to_json(&HolderOutput { x: report.node, constant: report.constant, sharp: report.sharp })?)
        }
        (ClassSpec::Holder { .. }, _) => {
            let report = bound_balanced(p, class).context("holder")?;
            Ok(to_json(&HolderOutput { x: report.node, constant: report.constant, sharp: report.sharp })?)
        }
        (_, NodePolicy::Fixed { x }) => Ok(to_json(&bound_at(p, class, *x).context("bound")?)?),
        (_, NodePolicy::Optimize) => {
            let (x, _) = optimize_node(p, class).context("bound")?;
            Ok(to_json(&bound_at(p, class, x).context("bound")?)?)
        }
        (_, NodePolicy::Sweep { grid }) => {
            let points = sweep_node(p, class, *grid).context("bound")?;
            Ok(match format {
                Format::Csv => to_csv(&["x", "constant"], points.iter().map(|&(x, c)| vec![x, c])),
                Format::Json => {
                    to_json(&points.iter().map(|&(x, constant)| SweepPoint { x, constant }).collect::<Vec<_>>())?
                }
            })
        }
        (_, NodePolicy::Balance) => unreachable!("rejected by validation"),
    }
}

/// Runs `config` and writes the report to its output path, if any.
/// Otherwise the caller prints [`Outcome::body`].
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let format = config.output.format;
    let outcome = match &config.task {
        Task::Kernel { p, n, x, weights, samples, .. } => {
            let weights = match weights {
                Some(w) => w.clone(),
                None => WeightSystem::trivial(p.domain(), *n),
            };
            let chain = build_chain(p, &weights, *x, *n).context("kernel")?;
            if let Some(path) = samples {
                fs::write(path, kernel_csv(&chain)).with_context(|| format!("samples: cannot write {path:?}"))?;
            }
            Outcome::ok(match format {
                Format::Csv => kernel_csv(&chain),
                Format::Json => to_json(&chain)?,
            })
        }
        Task::Bound(problem) | Task::Holder(problem) => Outcome::ok(run_problem(problem, format)?),
        Task::Cube { d, q } => {
            let constant = cube_constant(&CubeSpec::new(*d, *q)?);
            Outcome::ok(to_json(&CubeOutput { d: *d, q: *q, constant })?)
        }
        Task::BallBv { v } => Outcome::ok(to_json(&BallOutput { v: *v, bound: ball_bv_bound(*v)? })?),
        Task::Verify { suite, trials, cases } => {
            let report = run_suite(*suite, *trials, config.seed.unwrap_or(0), cases.as_deref()).context("verify")?;
            Outcome { body: to_json(&report)?, passed: report.passed }
        }
    };
    if let Some(path) = &config.output.path {
        fs::write(path, &outcome.body).with_context(|| format!("output: cannot write {path:?}"))?;
    }
    Ok(outcome)
}

/// Canonical JSON of a configuration, readable by `--config`.
pub fn render(config: &RunConfig) -> Result<String> {
    Ok(to_json(config)?)
}
