//! Acceptance criteria, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{exit, Command};
use std::time::Instant;

use sharpquad::bounds::sobolev_bound;
use sharpquad::holder::{balancing_point, holder_bound};
use sharpquad::multivariate::{cube_constant, monte_carlo_cube_norm_power, CubeSpec};
use sharpquad::suite::{audit_suite, default_audit_cases, extremal_suite, moment_suite, representation_suite};
use sharpquad::{Exponent, Interval, ModulusSpec, PiecewisePolynomial};

const SEED: u64 = 7;

type Check = fn() -> Result<String, String>;

fn unit() -> Interval {
    Interval::unit()
}

fn one() -> PiecewisePolynomial {
    PiecewisePolynomial::constant(unit(), 1.0)
}

fn inf() -> Exponent {
    Exponent::INFINITY
}

fn expect(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn classical_ostrowski() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for x in [0.0, 0.25, 0.5, 1.0] {
        let c = sobolev_bound(&one(), 1, inf(), x).map_err(|e| e.to_string())?.constant;
        worst = worst.max(rel(c, 0.25 + (x - 0.5) * (x - 0.5)));
    }
    expect(worst < 1e-12, format!("max relative error {worst:.3e} (< 1e-12)"))
}

fn midpoint_constant() -> Result<String, String> {
    let c = sobolev_bound(&one(), 2, inf(), 0.5).map_err(|e| e.to_string())?.constant;
    let err = (c - 1.0 / 24.0).abs();
    expect(err <= 1e-13, format!("constant {c:.17}, error {err:.3e} (<= 1e-13)"))
}

fn moment_identity() -> Result<String, String> {
    let r = moment_suite(SEED).map_err(|e| e.to_string())?;
    expect(
        r.cases == 200 && r.max_scaled_residual < 1e-10,
        format!("{} cases, max residual/scale {:.3e} (< 1e-10)", r.cases, r.max_scaled_residual),
    )
}

fn representation_identity() -> Result<String, String> {
    let r = representation_suite(SEED).map_err(|e| e.to_string())?;
    expect(
        r.cases == 200
            && r.weighted_cases == 50
            && r.max_scaled_residual < 1e-10
            && r.weighted_max_scaled_residual < 1e-9,
        format!(
            "{} trivial cases max {:.3e} (< 1e-10); {} weighted cases max {:.3e} (< 1e-9)",
            r.cases, r.max_scaled_residual, r.weighted_cases, r.weighted_max_scaled_residual
        ),
    )
}

fn balancing() -> Result<String, String> {
    let x = balancing_point(&PiecewisePolynomial::identity(unit()), 1).map_err(|e| e.to_string())?;
    let err = (x - 2.0 / 3.0).abs();
    expect(err <= 1e-12, format!("x = {x:.17}, error {err:.3e} (<= 1e-12)"))
}

fn holder_examples() -> Result<String, String> {
    let lin = holder_bound(&one(), 1, &ModulusSpec::linear(1.0).unwrap()).map_err(|e| e.to_string())?.constant;
    let sqrt = holder_bound(&one(), 1, &ModulusSpec::power(1.0, 0.5).unwrap()).map_err(|e| e.to_string())?.constant;
    let (e1, e2) = ((lin - 1.0 / 24.0).abs(), (sqrt - 1.0 / 15.0).abs());
    expect(e1 <= 1e-9 && e2 <= 1e-9, format!("omega=u error {e1:.3e}, omega=sqrt(u) error {e2:.3e} (<= 1e-9)"))
}

fn linear_cross_identity() -> Result<String, String> {
    let k = 1.7;
    let mut worst: f64 = 0.0;
    for p in [one(), PiecewisePolynomial::identity(unit())] {
        for n in [1, 3] {
            let h = holder_bound(&p, n, &ModulusSpec::linear(k).unwrap()).map_err(|e| e.to_string())?;
            let s = sobolev_bound(&p, n + 1, inf(), h.node).map_err(|e| e.to_string())?;
            worst = worst.max(rel(h.constant, k * s.constant));
        }
    }
    expect(worst < 1e-9, format!("max relative error {worst:.3e} (< 1e-9)"))
}

fn duality_attainment() -> Result<String, String> {
    let r = extremal_suite().map_err(|e| e.to_string())?;
    let configs: std::collections::BTreeSet<_> = r.cases.iter().map(|c| c.label.clone()).collect();
    let worst_smooth = r.cases.iter().filter(|c| !c.q.is_one()).map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let worst_spike = r.cases.iter().filter(|c| c.q.is_one()).map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let ok = configs.len() >= 3 && worst_smooth >= 1.0 - 1e-8 && worst_spike >= 0.999;
    expect(
        ok,
        format!(
            "{} configs; min ratio q in {{2,5,inf}} {worst_smooth:.12} (>= 1-1e-8), q=1 {worst_spike:.6} (>= 0.999)",
            configs.len()
        ),
    )
}

fn audit_soundness() -> Result<String, String> {
    let cases = default_audit_cases();
    let r = audit_suite(&cases, 10_000, SEED).map_err(|e| e.to_string())?;
    let violations: usize = r.cases.iter().map(|c| c.report.violations).sum();
    let max_ratio = r.cases.iter().map(|c| c.report.max_ratio).fold(0.0, f64::max);
    let trials = r.cases.iter().all(|c| c.report.trials == 10_000);
    expect(
        trials && violations == 0 && max_ratio <= 1.0 + 1e-9,
        format!("{} specs x 10^4 trials, {violations} violations, max ratio {max_ratio:.15}", r.cases.len()),
    )
}

fn cube_constants() -> Result<String, String> {
    let c2 = cube_constant(&CubeSpec::new(2, inf()).map_err(|e| e.to_string())?);
    let c3 = cube_constant(&CubeSpec::new(3, inf()).map_err(|e| e.to_string())?);
    let spec = CubeSpec::new(2, Exponent::new(3.0).unwrap()).map_err(|e| e.to_string())?;
    let c = cube_constant(&spec);
    let qp = spec.exponent().conjugate().value();
    let mc = monte_carlo_cube_norm_power(&spec, 1_000_000, SEED);
    let z = mc.z_score((spec.dimension() as f64 * c).powf(qp));
    let (e2, e3) = ((c2 - 8.0 / 3.0).abs(), (c3 - 6.0).abs());
    expect(
        e2 <= 1e-12 && e3 <= 1e-12 && z < 3.0,
        format!("d=2 error {e2:.3e}, d=3 error {e3:.3e}; d=2,q=3 constant {c:.12} vs Monte-Carlo at {z:.2} SE (< 3)"),
    )
}

fn interval_scaling() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for l in [0.5, 2.0] {
        let long = PiecewisePolynomial::constant(Interval::new(0.0, l).unwrap(), 1.0);
        for (n, q) in [(1, inf()), (2, Exponent::new(2.0).unwrap())] {
            for x in [0.0, 0.3, 0.5] {
                let base = sobolev_bound(&one(), n, q, x).map_err(|e| e.to_string())?.constant;
                let scaled = sobolev_bound(&long, n, q, l * x).map_err(|e| e.to_string())?.constant;
                let factor = l.powf(n as f64 + q.conjugate().reciprocal());
                worst = worst.max(rel(scaled, factor * base));
            }
        }
    }
    expect(worst < 1e-10, format!("max relative error {worst:.3e} (< 1e-10)"))
}

fn determinism() -> Result<String, String> {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_sharpquad"))
            .args(["verify", "--suite", "all", "--trials", "1000", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (first, second) = (run()?, run()?);
    let identical = first.stdout == second.stdout;
    let codes = (first.status.code(), second.status.code());
    expect(
        identical && codes == (Some(0), Some(0)) && !first.stdout.is_empty(),
        format!("reports identical: {identical} ({} bytes), exit codes {codes:?}", first.stdout.len()),
    )
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("classical Ostrowski constant", classical_ostrowski),
        ("midpoint constant", midpoint_constant),
        ("moment identity", moment_identity),
        ("representation identity", representation_identity),
        ("balancing point", balancing),
        ("Hölder bound", holder_examples),
        ("linear-omega cross-identity", linear_cross_identity),
        ("duality attainment", duality_attainment),
        ("audit soundness", audit_soundness),
        ("cube constant", cube_constants),
        ("interval scaling", interval_scaling),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.2} s]", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        exit(1);
    }
}
