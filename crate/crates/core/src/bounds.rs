//! Sharp constants on `W^n_q` and on the weighted classes `D^n_q`.
//!
//! The worst-case error of the recovery formula over the unit ball of `L_q`
//! in `D_n f` is `‖r_x^n‖_{L_{q'}}` with `1/q + 1/q' = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::holder::{holder_bound, holder_bound_at, ModulusSpec};
use crate::kernel::{build_chain, recovery_coefficients, KernelChain, WeightSystem, COEFFICIENT_AGREEMENT_TOL};
use crate::piecewise::PiecewisePolynomial;

/// Number of sweep points seeding [`optimize_node`].
pub const OPTIMIZE_SEED_POINTS: usize = 129;

/// Golden-section stopping width, relative to `b − a`.
pub const OPTIMIZE_BRACKET_TOL: f64 = 1e-10;

/// The function class a bound is taken over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    /// `‖f^{(n)}‖_q ≤ 1`.
    Sobolev { n: usize, q: Exponent },
    /// `‖D_n f‖_q ≤ 1` with `n` the number of weights.
    WeightedOperator { weights: WeightSystem, q: Exponent },
    /// `f^{(n)} ∈ H^ω`.
    Holder { n: usize, modulus: ModulusSpec },
}

impl ClassSpec {
    pub fn order(&self) -> usize {
        match self {
            ClassSpec::Sobolev { n, .. } | ClassSpec::Holder { n, .. } => *n,
            ClassSpec::WeightedOperator { weights, .. } => weights.len(),
        }
    }

    pub fn exponent(&self) -> Option<Exponent> {
        match self {
            ClassSpec::Sobolev { q, .. } | ClassSpec::WeightedOperator { q, .. } => Some(*q),
            ClassSpec::Holder { .. } => None,
        }
    }

    pub fn is_holder(&self) -> bool {
        matches!(self, ClassSpec::Holder { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.order() == 0 {
            return Err(Error::ZeroOrder);
        }
        if let ClassSpec::Holder { n, .. } = self {
            if n % 2 == 0 {
                return Err(Error::EvenOrder(*n));
            }
        }
        Ok(())
    }

    /// Weights of the operator chain (trivial for Sobolev and Hölder classes).
    pub fn weight_system(&self, p: &PiecewisePolynomial) -> Result<WeightSystem> {
        match self {
            ClassSpec::WeightedOperator { weights, .. } => {
                if weights.domain() != p.domain() {
                    let (d1, d2) = (p.domain(), weights.domain());
                    return Err(Error::DomainMismatch(d1.a(), d1.b(), d2.a(), d2.b()));
                }
                Ok(weights.clone())
            }
            other => Ok(WeightSystem::trivial(p.domain(), other.order())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCheck {
    pub moment_form: Vec<f64>,
    pub discrepancy: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attainment {
    pub ratio: f64,
    pub construction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub node: f64,
    pub coefficients: Vec<f64>,
    pub constant: f64,
    /// Absent for Hölder classes.
    pub qprime: Option<Exponent>,
    pub kernel: KernelChain,
    /// Cross-check of the two coefficient formulas (trivial weights only).
    pub coefficient_check: Option<CoefficientCheck>,
    pub attainment: Option<Attainment>,
    /// False only for Hölder bounds with a non-concave modulus.
    pub sharp: bool,
    /// Hölder classes: whether the balancing node is unique.
    pub unique_node: Option<bool>,
}

fn dual_report(chain: KernelChain, q: Exponent) -> Result<BoundReport> {
    let qprime = q.conjugate();
    let constant = chain.last().lq_norm(qprime);
    let coefficients = recovery_coefficients(&chain)?;
    let coefficient_check = coefficients.discrepancy.map(|d| CoefficientCheck {
        moment_form: coefficients.moment_form.clone().unwrap_or_default(),
        discrepancy: d,
        agree: d <= COEFFICIENT_AGREEMENT_TOL,
    });
    Ok(BoundReport {
        node: chain.node(),
        coefficients: coefficients.values,
        constant,
        qprime: Some(qprime),
        kernel: chain,
        coefficient_check,
        attainment: None,
        sharp: true,
        unique_node: None,
    })
}

/// Sharp constant on `W^n_q[a, b]` at node `x`.
pub fn sobolev_bound(p: &PiecewisePolynomial, n: usize, q: Exponent, x: f64) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    let chain = build_chain(p, &WeightSystem::trivial(p.domain(), n), x, n)?;
    dual_report(chain, q)
}

/// Sharp constant on `D^n_q[a, b]`, `n = weights.len()`, at node `x`.
pub fn general_bound(p: &PiecewisePolynomial, weights: &WeightSystem, q: Exponent, x: f64) -> Result<BoundReport> {
    if weights.is_empty() {
        return Err(Error::ZeroOrder);
    }
    let chain = build_chain(p, weights, x, weights.len())?;
    dual_report(chain, q)
}

/// Dispatches on the class. For Hölder classes `x` is only checked against
/// the balancing condition.
pub fn bound_at(p: &PiecewisePolynomial, spec: &ClassSpec, x: f64) -> Result<BoundReport> {
    spec.validate()?;
    match spec {
        ClassSpec::Sobolev { n, q } => sobolev_bound(p, *n, *q, x),
        ClassSpec::WeightedOperator { weights, q } => general_bound(p, weights, *q, x),
        ClassSpec::Holder { n, modulus } => holder_bound_at(p, *n, modulus, x),
    }
}

/// Hölder bound at the balancing node.
pub fn bound_balanced(p: &PiecewisePolynomial, spec: &ClassSpec) -> Result<BoundReport> {
    spec.validate()?;
    match spec {
        ClassSpec::Holder { n, modulus } => holder_bound(p, *n, modulus),
        _ => Err(Error::arg("node", "the balancing node policy applies to Hölder classes only")),
    }
}

/// The constant alone, skipping the coefficient computation.
pub fn constant_at(p: &PiecewisePolynomial, spec: &ClassSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let q =
        spec.exponent().ok_or_else(|| Error::arg("node", "Hölder classes fix the node by the balancing condition"))?;
    let n = spec.order();
    let chain = build_chain(p, &spec.weight_system(p)?, x, n)?;
    Ok(chain.last().lq_norm(q.conjugate()))
}

/// Constants at `grid + 1` equispaced nodes including both endpoints.
pub fn sweep_node(p: &PiecewisePolynomial, spec: &ClassSpec, grid: usize) -> Result<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(Error::arg("grid", format!("need at least 2 subintervals, got {grid}")));
    }
    spec.validate()?;
    if spec.is_holder() {
        return Err(Error::arg("node", "sweeps are not defined for Hölder classes"));
    }
    p.domain().grid(grid).into_par_iter().map(|x| constant_at(p, spec, x).map(|c| (x, c))).collect()
}

/// Node minimizing the constant: best of a 129-point sweep, refined by
/// golden-section search on the neighbouring bracket. The objective need not
/// be unimodal; only the bracket around the sweep minimum is searched.
pub fn optimize_node(p: &PiecewisePolynomial, spec: &ClassSpec) -> Result<(f64, f64)> {
    let table = sweep_node(p, spec, OPTIMIZE_SEED_POINTS - 1)?;
    let (best, &(x0, c0)) =
        table.iter().enumerate().min_by(|(_, u), (_, v)| u.1.total_cmp(&v.1)).expect("sweep is nonempty");
    let mut lo = table[best.saturating_sub(1)].0;
    let mut hi = table[(best + 1).min(table.len() - 1)].0;
    let width = OPTIMIZE_BRACKET_TOL * p.domain().length();
    let f = |x: f64| constant_at(p, spec, x);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut u = hi - inv_phi * (hi - lo);
    let mut v = lo + inv_phi * (hi - lo);
    let (mut fu, mut fv) = (f(u)?, f(v)?);
    while hi - lo > width {
        if fu <= fv {
            hi = v;
            v = u;
            fv = fu;
            u = hi - inv_phi * (hi - lo);
            fu = f(u)?;
        } else {
            lo = u;
            u = v;
            fu = fv;
            v = lo + inv_phi * (hi - lo);
            fv = f(v)?;
        }
    }
    let (xg, cg) = if fu <= fv { (u, fu) } else { (v, fv) };
    Ok(if cg < c0 { (xg, cg) } else { (x0, c0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::Interval;

    fn one() -> PiecewisePolynomial {
        PiecewisePolynomial::constant(Interval::unit(), 1.0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn sobolev_examples() {
        for x in [0.0, 0.25, 0.5, 0.9] {
            let c = sobolev_bound(&one(), 1, Exponent::INFINITY, x).unwrap().constant;
            assert!(rel(c, x * x / 2.0 + (1.0 - x) * (1.0 - x) / 2.0) < 1e-14, "x = {x}: {c}");
        }
        let mid = sobolev_bound(&one(), 2, Exponent::INFINITY, 0.5).unwrap();
        assert!((mid.constant - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(mid.qprime, Some(Exponent::ONE));
        let c = sobolev_bound(&one(), 1, Exponent::ONE, 0.0).unwrap();
        assert!((c.constant - 1.0).abs() < 1e-15);
        assert!(c.qprime.unwrap().is_infinite());
    }

    #[test]
    fn coefficient_check_is_reported() {
        let t = PiecewisePolynomial::identity(Interval::unit());
        let r = sobolev_bound(&t, 3, Exponent::new(2.0).unwrap(), 0.3).unwrap();
        let check = r.coefficient_check.unwrap();
        assert!(check.agree, "{check:?}");
        assert_eq!(r.coefficients.len(), 3);
    }

    #[test]
    fn weighted_examples() {
        let trivial = WeightSystem::trivial(Interval::unit(), 2);
        let g = general_bound(&one(), &trivial, Exponent::INFINITY, 0.3).unwrap();
        let s = sobolev_bound(&one(), 2, Exponent::INFINITY, 0.3).unwrap();
        assert!((g.constant - s.constant).abs() <= 1e-13 * s.constant);

        let w = PiecewisePolynomial::polynomial(Interval::unit(), vec![1.0, 1.0]).unwrap();
        let ws = WeightSystem::new(Interval::unit(), vec![w]).unwrap();
        let c = general_bound(&one(), &ws, Exponent::INFINITY, 1.0).unwrap();
        assert!(rel(c.constant, 2.0 / 3.0) < 1e-14);
        let c = general_bound(&one(), &ws, Exponent::ONE, 1.0).unwrap();
        assert!(rel(c.constant, 1.5) < 1e-14);
        assert!(c.coefficient_check.is_none());
    }

    #[test]
    fn sweep_examples() {
        let spec = ClassSpec::Sobolev { n: 1, q: Exponent::INFINITY };
        let table = sweep_node(&one(), &spec, 2).unwrap();
        let expected = [(0.0, 0.5), (0.5, 0.25), (1.0, 0.5)];
        for ((x, c), (ex, ec)) in table.iter().zip(expected) {
            assert_eq!(*x, ex);
            assert!((c - ec).abs() < 1e-15);
        }
        assert!(sweep_node(&one(), &spec, 1).is_err());
    }

    #[test]
    fn sweep_is_symmetric_for_symmetric_p() {
        let p = PiecewisePolynomial::polynomial(Interval::unit(), vec![1.0, -1.0, 1.0]).unwrap();
        let spec = ClassSpec::Sobolev { n: 2, q: Exponent::new(3.0).unwrap() };
        let table = sweep_node(&p, &spec, 16).unwrap();
        for i in 0..table.len() {
            let j = table.len() - 1 - i;
            assert!(rel(table[i].1, table[j].1) < 1e-10, "{:?} vs {:?}", table[i], table[j]);
        }
    }

    #[test]
    fn optimize_examples() {
        let spec = ClassSpec::Sobolev { n: 1, q: Exponent::INFINITY };
        let (x, c) = optimize_node(&one(), &spec).unwrap();
        assert!((x - 0.5).abs() < 1e-8 && (c - 0.25).abs() < 1e-15);
        let spec = ClassSpec::Sobolev { n: 2, q: Exponent::INFINITY };
        let (x, c) = optimize_node(&one(), &spec).unwrap();
        assert!((x - 0.5).abs() < 1e-8 && (c - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn optimize_off_grid_minimum() {
        // p = t: the q = ∞, n = 1 constant is x³/3 − x/2 + 1/3, minimized at x = 2^{-1/2}.
        let t = PiecewisePolynomial::identity(Interval::unit());
        let spec = ClassSpec::Sobolev { n: 1, q: Exponent::INFINITY };
        let (x, _) = optimize_node(&t, &spec).unwrap();
        assert!((x - 0.5f64.sqrt()).abs() < 1e-7, "{x}");
        let table = sweep_node(&t, &spec, 20).unwrap();
        let (_, c) = optimize_node(&t, &spec).unwrap();
        assert!(table.iter().all(|&(_, v)| v >= c - 1e-9));
    }

    #[test]
    fn holder_rejects_sweep_and_optimize() {
        let spec = ClassSpec::Holder { n: 1, modulus: ModulusSpec::linear(1.0).unwrap() };
        assert!(sweep_node(&one(), &spec, 4).is_err());
        assert!(optimize_node(&one(), &spec).is_err());
        assert!(bound_balanced(&one(), &spec).is_ok());
    }

    #[test]
    fn class_spec_json() {
        let spec: ClassSpec = serde_json::from_str(r#"{"kind":"sobolev","n":2,"q":"inf"}"#).unwrap();
        assert_eq!(spec, ClassSpec::Sobolev { n: 2, q: Exponent::INFINITY });
        let spec: ClassSpec = serde_json::from_str(
            r#"{"kind":"weighted_operator","weights":[{"breakpoints":[0,1],"pieces":[[1,1]]}],"q":1}"#,
        )
        .unwrap();
        assert_eq!(spec.order(), 1);
        let spec: ClassSpec =
            serde_json::from_str(r#"{"kind":"holder","n":1,"modulus":{"form":"linear","k":2}}"#).unwrap();
        assert!(spec.is_holder());
        assert!(serde_json::from_str::<ClassSpec>(r#"{"kind":"sobolev","n":2,"q":"inf","modulus":1}"#).is_err());
        assert!(serde_json::from_str::<ClassSpec>(r#"{"kind":"sobolev","n":2,"q":0.5}"#).is_err());
    }
}
