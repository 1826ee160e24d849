//! Run configuration in its canonical JSON form.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use sharpquad::multivariate::CubeSpec;
use sharpquad::suite::{AuditCase, SuiteKind};
use sharpquad::{ClassSpec, Exponent, Interval, PiecewisePolynomial, WeightSystem};

/// Number of kernel samples in plot output.
pub const KERNEL_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    /// Standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodePolicy {
    Fixed { x: f64 },
    Optimize,
    Sweep { grid: usize },
    Balance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub p: PiecewisePolynomial,
    pub interval: Interval,
    pub class: ClassSpec,
    pub node: NodePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Task {
    Kernel {
        p: PiecewisePolynomial,
        interval: Interval,
        n: usize,
        x: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<WeightSystem>,
        /// Extra CSV file of kernel samples written next to the JSON output.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<PathBuf>,
    },
    Bound(Problem),
    Holder(Problem),
    Cube {
        d: usize,
        q: Exponent,
    },
    BallBv {
        v: f64,
    },
    Verify {
        suite: SuiteKind,
        trials: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cases: Option<Vec<AuditCase>>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Kernel { .. } => "kernel",
            Task::Bound(_) => "bound",
            Task::Holder(_) => "holder",
            Task::Cube { .. } => "cube",
            Task::BallBv { .. } => "ball-bv",
            Task::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn check_domain(key: &str, p: &PiecewisePolynomial, interval: Interval) -> Result<()> {
    if p.domain() != interval {
        bail!(
            "{key}: domain [{}, {}] differs from interval [{}, {}]",
            p.domain().a(),
            p.domain().b(),
            interval.a(),
            interval.b()
        );
    }
    Ok(())
}

fn check_node(interval: Interval, x: f64) -> Result<()> {
    if !interval.contains(x) {
        bail!("x: node {x} lies outside [{}, {}]", interval.a(), interval.b());
    }
    Ok(())
}

impl RunConfig {
    /// Checks every cross-field invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let csv_ok = match &self.task {
            Task::Kernel { p, interval, n, x, weights, .. } => {
                check_domain("p", p, *interval)?;
                if *n == 0 {
                    bail!("n: order must be at least 1");
                }
                check_node(*interval, *x)?;
                if let Some(w) = weights {
                    if w.domain() != *interval {
                        bail!("weights: domain differs from interval");
                    }
                    if w.len() < *n {
                        bail!("weights: {} weights given but n = {n}", w.len());
                    }
                }
                true
            }
            Task::Bound(problem) | Task::Holder(problem) => {
                let holder = matches!(self.task, Task::Holder(_));
                self.validate_problem(problem, holder)?;
                matches!(problem.node, NodePolicy::Sweep { .. })
            }
            Task::Cube { d, q } => {
                if let Err(e) = CubeSpec::new(*d, *q) {
                    bail!("d, q: {e}");
                }
                false
            }
            Task::BallBv { v } => {
                if !(v.is_finite() && *v >= 0.0) {
                    bail!("v: variation must be a finite nonnegative number, got {v}");
                }
                false
            }
            Task::Verify { trials, cases, .. } => {
                if *trials == 0 {
                    bail!("trials: need at least one trial");
                }
                if let Some(cases) = cases {
                    if cases.is_empty() {
                        bail!("spec: empty list of audit cases");
                    }
                    for case in cases {
                        if let Err(e) = case.class.validate() {
                            bail!("spec: case {:?}: {e}", case.label);
                        }
                        if !case.class.is_holder() && case.x.is_none() {
                            bail!("spec: case {:?} needs a node x", case.label);
                        }
                    }
                }
                false
            }
        };
        if self.output.format == Format::Csv && !csv_ok {
            bail!("output.format: csv is available for kernel samples and bound sweeps only");
        }
        Ok(())
    }

    fn validate_problem(&self, problem: &Problem, holder: bool) -> Result<()> {
        check_domain("p", &problem.p, problem.interval)?;
        let n = problem.class.order();
        if n == 0 {
            bail!("n: order must be at least 1");
        }
        match (&problem.class, holder) {
            (ClassSpec::Holder { n, modulus }, true) => {
                if n % 2 == 0 {
                    bail!("n: n must be odd for Hölder classes (got {n})");
                }
                if let Err(e) = modulus.validate(problem.interval.length()) {
                    bail!("omega: {e}");
                }
            }
            (_, true) => bail!("class: the holder command needs a Hölder class"),
            (ClassSpec::Holder { .. }, false) => bail!("class: use the holder command for Hölder classes"),
            (ClassSpec::WeightedOperator { weights, .. }, false) if weights.domain() != problem.interval => {
                bail!("weights: domain differs from interval");
            }
            _ => {}
        }
        match (&problem.node, holder) {
            (NodePolicy::Fixed { x }, _) => check_node(problem.interval, *x)?,
            (NodePolicy::Balance, false) => bail!("node: policy balance is only available for Hölder classes"),
            (NodePolicy::Optimize | NodePolicy::Sweep { .. }, true) => {
                bail!("node: optimize and sweep are not available for Hölder classes")
            }
            (NodePolicy::Sweep { grid }, false) if *grid < 2 => bail!("sweep: grid needs at least 2 points"),
            _ => {}
        }
        Ok(())
    }
}
