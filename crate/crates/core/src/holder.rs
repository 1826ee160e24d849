//! Recovery error on classes `W^n H^ω` for odd `n`.
//!
//! Constants lie in `H^ω`, so a finite bound needs `∫ r_x^n = 0`; the node is
//! therefore fixed by the balancing condition `∫ p(t)(t − x)^n dt = 0`. With
//! `R(t) = ∫_a^t r_x^n`, the map `ρ: [a, x] → [x, b]` pairs points of equal
//! cumulative mass, and the Korneichuk–Stechkin rearrangement bounds the error
//! by `∫_a^x |r_x^n(t)| ω(ρ(t) − t) dt`, with equality for concave `ω`.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::kernel::{build_chain, moment, recovery_coefficients, KernelChain, WeightSystem};
use crate::piecewise::PiecewisePolynomial;
use crate::quadrature::integrate_adaptive;

/// Points of the audit grid used to validate a modulus.
pub const MODULUS_AUDIT_POINTS: usize = 1000;

pub const HOLDER_REL_TOL: f64 = 1e-10;

/// Tolerance of the balancing check, relative to `‖r‖_∞ (b − a)`.
pub const BALANCE_TOL: f64 = 1e-11;

/// Width above which the set of balancing nodes counts as an interval.
pub const NON_UNIQUE_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum ModulusForm {
    /// `K u`
    Linear { k: f64 },
    /// `K u^α`, `α ∈ (0, 1]`
    Power { k: f64, alpha: f64 },
    /// Piecewise-linear interpolant through `(u, ω(u))`, starting at `(0, 0)`
    /// and constant past the last point.
    Table { points: Vec<(f64, f64)> },
}

/// A modulus of continuity with a concavity flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModulus")]
pub struct ModulusSpec {
    #[serde(flatten)]
    form: ModulusForm,
    concave: bool,
}

#[derive(Deserialize)]
struct RawModulus {
    #[serde(flatten)]
    form: ModulusForm,
    #[serde(default)]
    concave: bool,
}

impl TryFrom<RawModulus> for ModulusSpec {
    type Error = Error;

    fn try_from(raw: RawModulus) -> Result<Self> {
        match raw.form {
            ModulusForm::Linear { k } => ModulusSpec::linear(k),
            ModulusForm::Power { k, alpha } => ModulusSpec::power(k, alpha),
            ModulusForm::Table { points } => ModulusSpec::table(points, raw.concave),
        }
    }
}

impl ModulusSpec {
    pub fn linear(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidModulus(format!("K must be positive, got {k}")));
        }
        Ok(ModulusSpec { form: ModulusForm::Linear { k }, concave: true })
    }

    pub fn power(k: f64, alpha: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidModulus(format!("K must be positive, got {k}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidModulus(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(ModulusSpec { form: ModulusForm::Power { k, alpha }, concave: true })
    }

    pub fn table(mut points: Vec<(f64, f64)>, concave: bool) -> Result<Self> {
        if points.iter().any(|(u, w)| !(u.is_finite() && w.is_finite())) {
            return Err(Error::InvalidModulus("table entries must be finite".into()));
        }
        if points.first().is_none_or(|&(u, _)| u != 0.0) {
            points.insert(0, (0.0, 0.0));
        }
        if points[0].1 != 0.0 {
            return Err(Error::InvalidModulus("omega(0) must be 0".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidModulus("table abscissae must be strictly increasing".into()));
        }
        Ok(ModulusSpec { form: ModulusForm::Table { points }, concave })
    }

    pub fn form(&self) -> &ModulusForm {
        &self.form
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// `Some(K)` when `ω(u) = K u`.
    pub fn linear_constant(&self) -> Option<f64> {
        match self.form {
            ModulusForm::Linear { k } => Some(k),
            _ => None,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match &self.form {
            ModulusForm::Linear { k } => k * u,
            ModulusForm::Power { k, alpha } => k * u.powf(*alpha),
            ModulusForm::Table { points } => {
                let i = points.partition_point(|&(ui, _)| ui <= u);
                if i >= points.len() {
                    points[points.len() - 1].1
                } else {
                    let (u0, w0) = points[i - 1];
                    let (u1, w1) = points[i];
                    w0 + (w1 - w0) * (u - u0) / (u1 - u0)
                }
            }
        }
    }

    /// Checks `ω(0) = 0`, monotonicity, subadditivity and (when flagged)
    /// midpoint concavity on an equispaced grid over `[0, span]`.
    pub fn validate(&self, span: f64) -> Result<()> {
        let m = MODULUS_AUDIT_POINTS;
        let grid: Vec<f64> = (0..=m).map(|i| span * i as f64 / m as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&u| self.eval(u)).collect();
        let top = vals[m].abs().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * top;
        if vals[0] != 0.0 {
            return Err(Error::InvalidModulus(format!("omega(0) = {} != 0", vals[0])));
        }
        if let Some(i) = (1..=m).find(|&i| vals[i] < vals[i - 1] - tol) {
            return Err(Error::InvalidModulus(format!("omega decreases near u = {}", grid[i])));
        }
        for i in 1..=m {
            for j in i..=(m - i) {
                if vals[i + j] > vals[i] + vals[j] + tol {
                    return Err(Error::InvalidModulus(format!(
                        "omega is not subadditive: omega({}) > omega({}) + omega({})",
                        grid[i + j],
                        grid[i],
                        grid[j]
                    )));
                }
            }
        }
        if self.concave {
            for i in 0..=m {
                for j in ((i + 2)..=m).step_by(2) {
                    let mid = (i + j) / 2;
                    if vals[mid] < 0.5 * (vals[i] + vals[j]) - tol {
                        return Err(Error::InvalidModulus(format!(
                            "omega is flagged concave but fails midpoint concavity at u = {}",
                            grid[mid]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_density(p: &PiecewisePolynomial) -> Result<f64> {
    let (at, min) = p.min_value();
    let sup = p.lq_norm(crate::Exponent::INFINITY);
    if min < -1e-14 * sup {
        return Err(Error::NegativeDensity { at, value: min });
    }
    let mass = p.integral();
    if mass <= 0.0 {
        return Err(Error::NoMass(mass));
    }
    Ok(mass)
}

fn check_odd(n: usize) -> Result<()> {
    match n {
        0 => Err(Error::ZeroOrder),
        n if n % 2 == 0 => Err(Error::EvenOrder(n)),
        _ => Ok(()),
    }
}

/// The leftmost and rightmost zeros of `m(x) = ∫ p(t)(t − x)^n dt`, which is
/// nonincreasing in `x` for odd `n` and `p ≥ 0`.
pub fn balancing_interval(p: &PiecewisePolynomial, n: usize) -> Result<(f64, f64)> {
    check_odd(n)?;
    check_density(p)?;
    let domain = p.domain();
    let m = |x: f64| moment(p, x, n).expect("degree is bounded by the cap check on p");
    let bisect = |go_right: &dyn Fn(f64) -> bool| {
        let (mut lo, mut hi) = (domain.a(), domain.b());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if go_right(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    };
    let (left_lo, left_hi) = bisect(&|x| m(x) > 0.0);
    let (right_lo, right_hi) = bisect(&|x| m(x) >= 0.0);
    // Pick whichever end of the final bracket has the smaller |m|.
    let pick = |lo: f64, hi: f64| if m(lo).abs() <= m(hi).abs() { lo } else { hi };
    Ok((pick(left_lo, left_hi), pick(right_lo, right_hi)))
}

/// The balancing node: the leftmost zero of `∫ p(t)(t − x)^n dt`.
pub fn balancing_point(p: &PiecewisePolynomial, n: usize) -> Result<f64> {
    balancing_interval(p, n).map(|(left, _)| left)
}

/// `R = ∫_a^· r_x^n` together with the pairing `ρ` of equal cumulative mass.
#[derive(Debug, Clone)]
pub struct RearrangementMap {
    chain: KernelChain,
    cumulative: PiecewisePolynomial,
}

pub fn build_rho(chain: &KernelChain) -> Result<RearrangementMap> {
    check_odd(chain.order())?;
    if !chain.weights().is_trivial() {
        return Err(Error::arg("weights", "the rearrangement bound needs trivial weights"));
    }
    check_density(chain.p())?;
    let r = chain.last();
    let domain = chain.domain();
    let cumulative = r.antiderivative(domain.a())?;
    let residual = cumulative.value(domain.b());
    let scale = r.lq_norm(crate::Exponent::INFINITY) * domain.length();
    if residual.abs() > BALANCE_TOL * scale {
        return Err(Error::Unbalanced { x: chain.node(), residual });
    }
    Ok(RearrangementMap { chain: chain.clone(), cumulative })
}

impl RearrangementMap {
    pub fn chain(&self) -> &KernelChain {
        &self.chain
    }

    /// `R(t) = ∫_a^t r_x^n`.
    pub fn cumulative(&self) -> &PiecewisePolynomial {
        &self.cumulative
    }

    /// The point `s ∈ [x, b]` with `R(s) = R(t)`, for `t ∈ [a, x]`.
    pub fn rho(&self, t: f64) -> f64 {
        let x = self.chain.node();
        let domain = self.chain.domain();
        if t <= domain.a() {
            return domain.b();
        }
        if t >= x {
            return x;
        }
        self.solve_right(self.cumulative.value(t), x, domain.b())
    }

    /// Inverse of [`rho`](Self::rho): the point `t ∈ [a, x]` with `R(t) = R(s)`.
    pub fn rho_inverse(&self, s: f64) -> f64 {
        let x = self.chain.node();
        let a = self.chain.domain().a();
        let target = self.cumulative.value(s.max(x));
        // R is nonincreasing on [a, x].
        let (mut lo, mut hi) = (a, x);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cumulative.value(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn solve_right(&self, target: f64, x: f64, b: f64) -> f64 {
        // R is nondecreasing on [x, b].
        let (mut lo, mut hi) = (x, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cumulative.value(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `∫_a^x |r_x^n(t)| ω(ρ(t) − t) dt`.
    pub fn rearrangement_integral(&self, omega: &ModulusSpec) -> f64 {
        let x = self.chain.node();
        let domain = self.chain.domain();
        let r = self.chain.last();
        if x <= domain.a() {
            return 0.0;
        }
        // Kinks of the integrand: breakpoints of r on the left, and preimages
        // under ρ of breakpoints on the right.
        let mut breaks: Vec<f64> = r.breakpoints().iter().copied().filter(|&t| t <= x).collect();
        breaks.extend(r.breakpoints().iter().filter(|&&s| s > x && s < domain.b()).map(|&s| self.rho_inverse(s)));
        breaks.push(domain.a());
        breaks.push(x);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.retain(|&t| t >= domain.a() && t <= x);
        let integrand = |t: f64| r.value(t).abs() * omega.eval(self.rho(t) - t);
        let scale = r.lq_norm(crate::Exponent::INFINITY) * omega.eval(domain.length()) * domain.length();
        integrate_adaptive(&integrand, &breaks, HOLDER_REL_TOL, 1e-15 * scale).value
    }
}

/// Sharp (for concave `ω`) error bound on `W^n H^ω` at the balancing node.
pub fn holder_bound(p: &PiecewisePolynomial, n: usize, omega: &ModulusSpec) -> Result<BoundReport> {
    holder_report(p, n, omega, None)
}

/// As [`holder_bound`], after checking that a user-supplied node satisfies
/// the balancing condition. The reported node is always the recomputed one.
pub fn holder_bound_at(p: &PiecewisePolynomial, n: usize, omega: &ModulusSpec, x: f64) -> Result<BoundReport> {
    holder_report(p, n, omega, Some(x))
}

fn holder_report(
    p: &PiecewisePolynomial,
    n: usize,
    omega: &ModulusSpec,
    user_node: Option<f64>,
) -> Result<BoundReport> {
    let domain = p.domain();
    let (left, right) = balancing_interval(p, n)?;
    let weights = WeightSystem::trivial(domain, n);
    if let Some(x) = user_node {
        domain.check(x)?;
        build_rho(&build_chain(p, &weights, x, n)?)?;
    }
    omega.validate(domain.length())?;
    let chain = build_chain(p, &weights, left, n)?;
    let map = build_rho(&chain)?;
    let constant = map.rearrangement_integral(omega);
    let coefficients = recovery_coefficients(&chain)?;
    Ok(BoundReport {
        node: left,
        coefficients: coefficients.values.clone(),
        constant,
        qprime: None,
        coefficient_check: coefficients.discrepancy.map(|d| crate::bounds::CoefficientCheck {
            moment_form: coefficients.moment_form.clone().unwrap_or_default(),
            discrepancy: d,
            agree: d <= crate::kernel::COEFFICIENT_AGREEMENT_TOL,
        }),
        kernel: chain,
        attainment: None,
        sharp: omega.is_concave(),
        unique_node: Some(right - left <= NON_UNIQUE_WIDTH * domain.length()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::Interval;

    fn one() -> PiecewisePolynomial {
        PiecewisePolynomial::constant(Interval::unit(), 1.0)
    }

    fn identity() -> PiecewisePolynomial {
        PiecewisePolynomial::identity(Interval::unit())
    }

    #[test]
    fn balancing_examples() {
        assert!((balancing_point(&one(), 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((balancing_point(&identity(), 1).unwrap() - 2.0 / 3.0).abs() < 1e-13);
        assert_eq!(balancing_point(&one(), 2), Err(Error::EvenOrder(2)));
    }

    #[test]
    fn balancing_rejects_negative_density() {
        let p = PiecewisePolynomial::polynomial(Interval::unit(), vec![-0.5, 1.0]).unwrap();
        assert!(matches!(balancing_point(&p, 1), Err(Error::NegativeDensity { .. })));
        let zero = PiecewisePolynomial::zero(Interval::unit());
        assert!(matches!(balancing_point(&zero, 1), Err(Error::NoMass(_))));
    }

    #[test]
    fn density_with_a_gap_still_balances_uniquely() {
        // p = 1 on [0, ¼] ∪ [¾, 1], zero in between. The moment ¼ − x/2 is
        // strictly decreasing, so the gap does not create a flat root set.
        let p = PiecewisePolynomial::new(vec![0.0, 0.25, 0.75, 1.0], vec![vec![1.0], vec![0.0], vec![1.0]]).unwrap();
        let (left, right) = balancing_interval(&p, 1).unwrap();
        assert!((left - 0.5).abs() < 1e-13 && (right - 0.5).abs() < 1e-13);
        let omega = ModulusSpec::linear(1.0).unwrap();
        let report = holder_bound(&p, 1, &omega).unwrap();
        assert_eq!(report.unique_node, Some(true));
        let (left, right) = balancing_interval(&p, 3).unwrap();
        assert!((left - 0.5).abs() < 1e-12 && (right - left).abs() < 1e-10);
    }

    #[test]
    fn rho_examples() {
        let ws = WeightSystem::trivial(Interval::unit(), 1);
        let map = build_rho(&build_chain(&one(), &ws, 0.5, 1).unwrap()).unwrap();
        for t in [0.0, 0.2, 0.5] {
            assert!((map.rho(t) - (1.0 - t)).abs() < 1e-12, "rho({t}) = {}", map.rho(t));
        }
        assert!((map.rho_inverse(0.8) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn build_rho_rejects_unbalanced_node() {
        let ws = WeightSystem::trivial(Interval::unit(), 1);
        let chain = build_chain(&one(), &ws, 0.4, 1).unwrap();
        assert!(matches!(build_rho(&chain), Err(Error::Unbalanced { .. })));
    }

    #[test]
    fn holder_examples() {
        let lin = holder_bound(&one(), 1, &ModulusSpec::linear(1.0).unwrap()).unwrap();
        assert!((lin.constant - 1.0 / 24.0).abs() < 1e-12, "{}", lin.constant);
        assert!(lin.sharp);
        let sqrt = holder_bound(&one(), 1, &ModulusSpec::power(1.0, 0.5).unwrap()).unwrap();
        assert!((sqrt.constant - 1.0 / 15.0).abs() < 1e-10, "{}", sqrt.constant);
        let k = holder_bound(&one(), 1, &ModulusSpec::linear(3.5).unwrap()).unwrap();
        assert!((k.constant - 3.5 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn user_node_is_checked() {
        let omega = ModulusSpec::linear(1.0).unwrap();
        assert!(holder_bound_at(&one(), 1, &omega, 0.5).is_ok());
        assert!(matches!(holder_bound_at(&one(), 1, &omega, 0.6), Err(Error::Unbalanced { .. })));
    }

    #[test]
    fn modulus_validation() {
        assert!(ModulusSpec::power(1.0, 1.5).is_err());
        assert!(ModulusSpec::linear(-1.0).is_err());
        assert!(ModulusSpec::power(2.0, 0.5).unwrap().validate(1.0).is_ok());
        // u^2 is not subadditive; flagged concave it fails earlier or later.
        let square =
            ModulusSpec::table((0..=10).map(|i| (i as f64 / 10.0, (i as f64 / 10.0).powi(2))).collect(), false)
                .unwrap();
        assert!(matches!(square.validate(1.0), Err(Error::InvalidModulus(_))));
        // A subadditive but non-concave staircase-like table.
        let bumpy = ModulusSpec::table(vec![(0.0, 0.0), (0.1, 0.5), (0.5, 0.6), (0.6, 0.9), (1.0, 1.0)], true).unwrap();
        assert!(bumpy.validate(1.0).is_err());
        let relaxed =
            ModulusSpec::table(vec![(0.0, 0.0), (0.1, 0.5), (0.5, 0.6), (0.6, 0.9), (1.0, 1.0)], false).unwrap();
        assert!(relaxed.validate(1.0).is_ok());
    }

    #[test]
    fn non_concave_modulus_is_not_sharp() {
        let omega =
            ModulusSpec::table(vec![(0.0, 0.0), (0.1, 0.5), (0.5, 0.6), (0.6, 0.9), (1.0, 1.0)], false).unwrap();
        let report = holder_bound(&one(), 1, &omega).unwrap();
        assert!(!report.sharp);
        assert!(report.constant > 0.0);
    }

    #[test]
    fn modulus_json() {
        let m: ModulusSpec = serde_json::from_str(r#"{"form":"power","k":1,"alpha":0.5}"#).unwrap();
        assert_eq!(m, ModulusSpec::power(1.0, 0.5).unwrap());
        let t: ModulusSpec = serde_json::from_str(r#"{"form":"table","points":[[0,0],[1,1]],"concave":true}"#).unwrap();
        assert!(t.is_concave());
        assert_eq!(t.eval(0.25), 0.25);
        assert_eq!(t.eval(3.0), 1.0);
        assert!(serde_json::from_str::<ModulusSpec>(r#"{"form":"power","k":1,"alpha":2}"#).is_err());
    }
}
