//! Batteries of verification runs with pass/fail contracts.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ClassSpec;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::holder::ModulusSpec;
use crate::kernel::{build_chain, WeightSystem};
use crate::piecewise::{Interval, PiecewisePolynomial};
use crate::verify::{
    extremal_function, monte_carlo_audit, reconstruct_from_derivative, verify_moment_identity, verify_representation,
    AuditReport, Derivative, TestFunction,
};

pub const REPRESENTATION_CASES: usize = 200;
pub const WEIGHTED_CASES: usize = 50;
pub const MOMENT_CASES: usize = 200;
pub const REPRESENTATION_TOL: f64 = 1e-10;
pub const WEIGHTED_TOL: f64 = 1e-9;
pub const MOMENT_TOL: f64 = 1e-10;
pub const EXTREMAL_TOL: f64 = 1e-8;
pub const SPIKE_THRESHOLD: f64 = 0.999;

const REPRESENTATION_SALT: u64 = 0x5245_5052;
const WEIGHTED_SALT: u64 = 0x5745_4947;
const MOMENT_SALT: u64 = 0x4d4f_4d45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Representation,
    Moments,
    Extremal,
    Audit,
    All,
}

impl SuiteKind {
    fn includes(self, other: SuiteKind) -> bool {
        self == SuiteKind::All || self == other
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SuiteKind::Representation => "representation",
            SuiteKind::Moments => "moments",
            SuiteKind::Extremal => "extremal",
            SuiteKind::Audit => "audit",
            SuiteKind::All => "all",
        };
        f.write_str(name)
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "representation" => Ok(SuiteKind::Representation),
            "moments" => Ok(SuiteKind::Moments),
            "extremal" => Ok(SuiteKind::Extremal),
            "audit" => Ok(SuiteKind::Audit),
            "all" => Ok(SuiteKind::All),
            other => Err(Error::arg(
                "suite",
                format!("unknown suite {other:?}; expected representation, moments, extremal, audit or all"),
            )),
        }
    }
}

/// One audited problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditCase {
    pub label: String,
    pub p: PiecewisePolynomial,
    pub class: ClassSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

/// The default audit matrix on `[0, 1]` with `p ≡ 1`.
pub fn default_audit_cases() -> Vec<AuditCase> {
    let unit = Interval::unit();
    let one = PiecewisePolynomial::constant(unit, 1.0);
    let weight = PiecewisePolynomial::polynomial(unit, vec![1.0, 1.0]).expect("degree 1");
    let case =
        |label: &str, class: ClassSpec, x: Option<f64>| AuditCase { label: label.into(), p: one.clone(), class, x };
    vec![
        case("sobolev n=1 q=inf", ClassSpec::Sobolev { n: 1, q: Exponent::INFINITY }, Some(0.3)),
        case("sobolev n=2 q=2", ClassSpec::Sobolev { n: 2, q: Exponent::new(2.0).expect("valid") }, Some(0.3)),
        case(
            "weighted w=1+t q=inf",
            ClassSpec::WeightedOperator {
                weights: WeightSystem::new(unit, vec![weight]).expect("positive weight"),
                q: Exponent::INFINITY,
            },
            Some(0.3),
        ),
        case("holder n=1 omega=u", ClassSpec::Holder { n: 1, modulus: ModulusSpec::linear(1.0).expect("valid") }, None),
        case(
            "holder n=1 omega=sqrt(u)",
            ClassSpec::Holder { n: 1, modulus: ModulusSpec::power(1.0, 0.5).expect("valid") },
            None,
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub cases: usize,
    pub max_scaled_residual: f64,
    pub weighted_cases: usize,
    pub weighted_max_scaled_residual: f64,
    /// Weighted configurations re-drawn after an inexact division.
    pub redraws: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub cases: usize,
    pub max_scaled_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCase {
    pub label: String,
    pub q: Exponent,
    pub construction: String,
    pub ratio: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub cases: Vec<ExtremalCase>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCaseReport {
    pub label: String,
    pub report: AuditReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSuiteReport {
    pub cases: Vec<AuditCaseReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representation: Option<RepresentationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSuiteReport>,
    pub passed: bool,
}

fn case_rng(seed: u64, salt: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    rng.set_stream(case as u64);
    rng
}

fn normal_poly(rng: &mut impl Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    let a = rng.random_range(-1.0..0.5);
    Interval::new(a, a + rng.random_range(0.5..1.5)).expect("positive length")
}

/// Linear weight with minimum in `[0.5, 1.5]` on `domain`.
fn random_linear_weight(domain: Interval, rng: &mut impl Rng) -> PiecewisePolynomial {
    let slope: f64 = rng.random_range(-1.0..1.0);
    let floor = rng.random_range(0.5..1.5);
    let at_min = if slope >= 0.0 { domain.a() } else { domain.b() };
    PiecewisePolynomial::polynomial(domain, vec![floor - slope * at_min, slope]).expect("degree 1")
}

fn trivial_representation_case(seed: u64, case: usize) -> Result<f64> {
    let mut rng = case_rng(seed, REPRESENTATION_SALT, case);
    let domain = random_interval(&mut rng);
    let p_degree = rng.random_range(0..=4);
    let p = PiecewisePolynomial::polynomial(domain, normal_poly(&mut rng, p_degree))?;
    let f_degree = rng.random_range(0..=8);
    let f = PiecewisePolynomial::polynomial(domain, normal_poly(&mut rng, f_degree))?;
    let n = rng.random_range(1..=4);
    let x = rng.random_range(domain.a()..=domain.b());
    let weights = WeightSystem::trivial(domain, n);
    let tf = TestFunction::from_function(f, &weights, n)?;
    let res = verify_representation(&p, &weights, x, &tf, n)?;
    Ok(res.residual / (1.0 + res.lhs.abs()))
}

/// Draws `f` with `D_n f` polynomial, so that every division in its chain is
/// exact, and checks the chain by division. Returns the scaled residual and
/// the number of re-draws.
fn weighted_representation_case(seed: u64, case: usize) -> Result<(f64, usize)> {
    let mut rng = case_rng(seed, WEIGHTED_SALT, case);
    let mut redraws = 0;
    loop {
        let domain = random_interval(&mut rng);
        let n = rng.random_range(1..=3);
        let weights = (0..n).map(|_| random_linear_weight(domain, &mut rng)).collect();
        let weights = WeightSystem::new(domain, weights)?;
        let p_degree = rng.random_range(0..=3);
        let p = PiecewisePolynomial::polynomial(domain, normal_poly(&mut rng, p_degree))?;
        let g_degree = rng.random_range(0..=4);
        let g = PiecewisePolynomial::polynomial(domain, normal_poly(&mut rng, g_degree))?;
        let x = rng.random_range(domain.a()..=domain.b());
        let built = reconstruct_from_derivative(&Derivative::Exact(g), &weights, n)?;
        match TestFunction::from_function(built.f, &weights, n) {
            Ok(tf) => {
                let res = verify_representation(&p, &weights, x, &tf, n)?;
                return Ok((res.residual / (1.0 + res.lhs.abs()), redraws));
            }
            Err(Error::Degenerate(_)) => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

pub fn representation_suite(seed: u64) -> Result<RepresentationReport> {
    let trivial: Vec<f64> = (0..REPRESENTATION_CASES)
        .into_par_iter()
        .map(|case| trivial_representation_case(seed, case))
        .collect::<Result<_>>()?;
    let weighted: Vec<(f64, usize)> = (0..WEIGHTED_CASES)
        .into_par_iter()
        .map(|case| weighted_representation_case(seed, case))
        .collect::<Result<_>>()?;
    let max_scaled_residual = trivial.iter().copied().fold(0.0, f64::max);
    let weighted_max_scaled_residual = weighted.iter().map(|w| w.0).fold(0.0, f64::max);
    Ok(RepresentationReport {
        cases: trivial.len(),
        max_scaled_residual,
        weighted_cases: weighted.len(),
        weighted_max_scaled_residual,
        redraws: weighted.iter().map(|w| w.1).sum(),
        passed: max_scaled_residual < REPRESENTATION_TOL && weighted_max_scaled_residual < WEIGHTED_TOL,
    })
}

fn moment_case(seed: u64, case: usize) -> Result<f64> {
    let mut rng = case_rng(seed, MOMENT_SALT, case);
    let domain = random_interval(&mut rng);
    let p = PiecewisePolynomial::polynomial(domain, normal_poly(&mut rng, 5))?;
    let x = rng.random_range(domain.a()..=domain.b());
    let check = verify_moment_identity(&p, x, 5)?;
    Ok(check.max_residual / check.scale)
}

pub fn moment_suite(seed: u64) -> Result<MomentReport> {
    let scaled: Vec<f64> =
        (0..MOMENT_CASES).into_par_iter().map(|case| moment_case(seed, case)).collect::<Result<_>>()?;
    let max_scaled_residual = scaled.iter().copied().fold(0.0, f64::max);
    Ok(MomentReport { cases: scaled.len(), max_scaled_residual, passed: max_scaled_residual < MOMENT_TOL })
}

/// Fixed `(p, n, x)` configurations on `[0, 1]` for the attainment checks.
pub fn extremal_configs() -> Vec<(&'static str, PiecewisePolynomial, usize, f64)> {
    let unit = Interval::unit();
    vec![
        ("p=1 n=1 x=0.5", PiecewisePolynomial::constant(unit, 1.0), 1, 0.5),
        ("p=t n=2 x=0.3", PiecewisePolynomial::identity(unit), 2, 0.3),
        ("p=1+t^2 n=3 x=0.7", PiecewisePolynomial::polynomial(unit, vec![1.0, 0.0, 1.0]).expect("degree 2"), 3, 0.7),
    ]
}

pub fn extremal_suite() -> Result<ExtremalReport> {
    let exponents = [Exponent::ONE, Exponent::new(2.0)?, Exponent::new(5.0)?, Exponent::INFINITY];
    let jobs: Vec<_> =
        extremal_configs().into_iter().flat_map(|cfg| exponents.iter().map(move |&q| (cfg.clone(), q))).collect();
    let cases: Vec<ExtremalCase> = jobs
        .into_par_iter()
        .map(|((label, p, n, x), q)| {
            let chain = build_chain(&p, &WeightSystem::trivial(p.domain(), n), x, n)?;
            let e = extremal_function(&chain, q)?;
            let threshold = if q.is_one() { SPIKE_THRESHOLD } else { 1.0 - EXTREMAL_TOL };
            Ok(ExtremalCase {
                label: label.to_string(),
                q,
                construction: e.construction.to_string(),
                ratio: e.ratio,
                threshold,
                passed: e.ratio >= threshold && e.ratio <= 1.0 + crate::verify::AUDIT_TOL,
            })
        })
        .collect::<Result<_>>()?;
    let passed = cases.iter().all(|c| c.passed);
    Ok(ExtremalReport { cases, passed })
}

pub fn audit_suite(cases: &[AuditCase], trials: usize, seed: u64) -> Result<AuditSuiteReport> {
    let reports = cases
        .iter()
        .map(|case| {
            let report = monte_carlo_audit(&case.p, &case.class, case.x, trials, seed)?;
            let extremal_ok = report.extremal_ratio.is_none_or(|r| r >= 1.0 - EXTREMAL_TOL);
            let passed = report.violations == 0 && extremal_ok;
            Ok(AuditCaseReport { label: case.label.clone(), report, passed })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|c| c.passed);
    Ok(AuditSuiteReport { cases: reports, passed })
}

/// Runs the selected suites. `cases` overrides [`default_audit_cases`].
pub fn run_suite(kind: SuiteKind, trials: usize, seed: u64, cases: Option<&[AuditCase]>) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::arg("trials", "need at least one trial"));
    }
    let representation = kind.includes(SuiteKind::Representation).then(|| representation_suite(seed)).transpose()?;
    let moments = kind.includes(SuiteKind::Moments).then(|| moment_suite(seed)).transpose()?;
    let extremal = kind.includes(SuiteKind::Extremal).then(extremal_suite).transpose()?;
    let defaults;
    let cases = match cases {
        Some(c) => c,
        None => {
            defaults = default_audit_cases();
            &defaults
        }
    };
    let audit = kind.includes(SuiteKind::Audit).then(|| audit_suite(cases, trials, seed)).transpose()?;
    let passed = representation.as_ref().is_none_or(|r| r.passed)
        && moments.as_ref().is_none_or(|r| r.passed)
        && extremal.as_ref().is_none_or(|r| r.passed)
        && audit.as_ref().is_none_or(|r| r.passed);
    Ok(SuiteReport { suite: kind, seed, trials, representation, moments, extremal, audit, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for kind in
            [SuiteKind::Representation, SuiteKind::Moments, SuiteKind::Extremal, SuiteKind::Audit, SuiteKind::All]
        {
            assert_eq!(kind.to_string().parse::<SuiteKind>().unwrap(), kind);
        }
        assert!("everything".parse::<SuiteKind>().is_err());
    }

    #[test]
    fn random_weights_are_positive() {
        let mut rng = case_rng(1, 0, 0);
        for _ in 0..100 {
            let d = random_interval(&mut rng);
            let w = random_linear_weight(d, &mut rng);
            assert!(w.min_value().1 >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn audit_case_json() {
        let cases = default_audit_cases();
        let json = serde_json::to_string(&cases).unwrap();
        let back: Vec<AuditCase> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cases);
    }

    #[test]
    fn small_run_passes() {
        let report = run_suite(SuiteKind::Audit, 50, 3, None).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.representation.is_none());
    }
}
