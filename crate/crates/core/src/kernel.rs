//! Error kernels of one-point recovery formulas.
//!
//! For a weight `w > 0` the kernel of `p` at node `x` is
//!
//! ```text
//! r_x(pw; s) = −∫_a^s p w   for s ≤ x,
//!               ∫_s^b p w   for s ≥ x,
//! ```
//!
//! and the chain `r^0 = p`, `r^k = r_x(w_k r^{k−1})` carries the error of the
//! recovery formula built from the operators `D_0 f = f`,
//! `D_k f = ((1/w_k) D_{k−1} f)'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{Interval, PiecewisePolynomial};
use crate::poly;

/// The weights `w_1..w_n` of a differential operator chain, each strictly
/// positive on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PiecewisePolynomial>", into = "Vec<PiecewisePolynomial>")]
pub struct WeightSystem {
    domain: Interval,
    weights: Vec<PiecewisePolynomial>,
    trivial: bool,
}

impl WeightSystem {
    pub fn new(domain: Interval, weights: Vec<PiecewisePolynomial>) -> Result<Self> {
        for (k, w) in weights.iter().enumerate() {
            if w.domain() != domain {
                let d = w.domain();
                return Err(Error::DomainMismatch(domain.a(), domain.b(), d.a(), d.b()));
            }
            check_positive(w, k + 1)?;
        }
        let trivial = weights.iter().all(is_unit);
        Ok(WeightSystem { domain, weights, trivial })
    }

    /// All weights identically one: `D_k f = f^{(k)}`.
    pub fn trivial(domain: Interval, n: usize) -> Self {
        WeightSystem { domain, weights: vec![PiecewisePolynomial::constant(domain, 1.0); n], trivial: true }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `w_k` for `k` in `1..=len`.
    pub fn weight(&self, k: usize) -> &PiecewisePolynomial {
        &self.weights[k - 1]
    }

    pub fn weights(&self) -> &[PiecewisePolynomial] {
        &self.weights
    }

    /// The first `n` weights.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::TooFewWeights { available: self.len(), requested: n });
        }
        Ok(WeightSystem {
            domain: self.domain,
            weights: self.weights[..n].to_vec(),
            trivial: self.trivial || self.weights[..n].iter().all(is_unit),
        })
    }
}

impl TryFrom<Vec<PiecewisePolynomial>> for WeightSystem {
    type Error = Error;

    fn try_from(weights: Vec<PiecewisePolynomial>) -> Result<Self> {
        let domain = weights
            .first()
            .map(PiecewisePolynomial::domain)
            .ok_or_else(|| Error::arg("weights", "at least one weight is required"))?;
        WeightSystem::new(domain, weights)
    }
}

impl From<WeightSystem> for Vec<PiecewisePolynomial> {
    fn from(ws: WeightSystem) -> Self {
        ws.weights
    }
}

fn is_unit(w: &PiecewisePolynomial) -> bool {
    w.pieces().iter().all(|c| c.as_slice() == [1.0])
}

fn check_positive(w: &PiecewisePolynomial, index: usize) -> Result<()> {
    let (at, value) = w.min_value();
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveWeight { index, at, value })
    }
}

/// One kernel step `r_x(p w; ·)`, with `x` inserted as a breakpoint.
pub fn kernel_step(p: &PiecewisePolynomial, w: &PiecewisePolynomial, x: f64) -> Result<PiecewisePolynomial> {
    check_positive(w, 1)?;
    step_unchecked(p, w, x)
}

fn step_unchecked(p: &PiecewisePolynomial, w: &PiecewisePolynomial, x: f64) -> Result<PiecewisePolynomial> {
    let domain = p.domain();
    domain.check(x)?;
    let pw = p.multiply(w)?.refine(&[x]);
    let cumulative = pw.antiderivative(domain.a())?;
    let last = cumulative.piece_count() - 1;
    let total = cumulative.piece_value(last, domain.b());
    let pieces = cumulative
        .pieces()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (_, hi) = cumulative.piece_bounds(i);
            if hi <= x {
                poly::scale(c, -1.0)
            } else {
                let mut tail = poly::scale(c, -1.0);
                tail[0] += total;
                tail
            }
        })
        .collect();
    PiecewisePolynomial::new(cumulative.breakpoints().to_vec(), pieces)
}

/// The kernel chain `r_x^0, …, r_x^n` with the data that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelChain {
    p: PiecewisePolynomial,
    x: f64,
    weights: WeightSystem,
    chain: Vec<PiecewisePolynomial>,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    p: PiecewisePolynomial,
    x: f64,
    weights: Vec<PiecewisePolynomial>,
    chain: Vec<PiecewisePolynomial>,
}

impl Serialize for KernelChain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawChain { p: self.p.clone(), x: self.x, weights: self.weights.weights.clone(), chain: self.chain.clone() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KernelChain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawChain::deserialize(deserializer)?;
        let weights = WeightSystem::new(raw.p.domain(), raw.weights).map_err(D::Error::custom)?;
        let rebuilt =
            build_chain(&raw.p, &weights, raw.x, raw.chain.len().saturating_sub(1)).map_err(D::Error::custom)?;
        Ok(rebuilt)
    }
}

impl KernelChain {
    pub fn p(&self) -> &PiecewisePolynomial {
        &self.p
    }

    pub fn node(&self) -> f64 {
        self.x
    }

    pub fn weights(&self) -> &WeightSystem {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn domain(&self) -> Interval {
        self.p.domain()
    }

    /// `r_x^k`.
    pub fn kernel(&self, k: usize) -> &PiecewisePolynomial {
        &self.chain[k]
    }

    /// `r_x^n`, the last kernel of the chain.
    pub fn last(&self) -> &PiecewisePolynomial {
        self.chain.last().expect("chain is never empty")
    }

    pub fn chain(&self) -> &[PiecewisePolynomial] {
        &self.chain
    }
}

/// Iterates [`kernel_step`] `n` times with the weights `w_1..w_n`.
pub fn build_chain(p: &PiecewisePolynomial, weights: &WeightSystem, x: f64, n: usize) -> Result<KernelChain> {
    let domain = p.domain();
    domain.check(x)?;
    if weights.domain() != domain {
        let d = weights.domain();
        return Err(Error::DomainMismatch(domain.a(), domain.b(), d.a(), d.b()));
    }
    let weights = weights.truncate(n)?;
    let mut chain = Vec::with_capacity(n + 1);
    chain.push(p.clone());
    for k in 1..=n {
        let next = step_unchecked(&chain[k - 1], weights.weight(k), x)?;
        chain.push(next);
    }
    Ok(KernelChain { p: p.clone(), x, weights, chain })
}

/// `(1/k!) ∫_a^b p(t) (t − x)^k dt`.
pub fn moment(p: &PiecewisePolynomial, x: f64, k: usize) -> Result<f64> {
    let shifted = PiecewisePolynomial::polynomial(p.domain(), poly::shifted_power(x, k))?;
    let factorial: f64 = (1..=k).map(|j| j as f64).product();
    Ok(p.multiply(&shifted)?.integral() / factorial)
}

/// Coefficients `c_0..c_{n−1}` of the recovery formula `Σ c_k (D_k f)(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCoefficients {
    pub values: Vec<f64>,
    /// `(1/k!) ∫ p (t − x)^k`, present for trivial weights.
    pub moment_form: Option<Vec<f64>>,
    /// Largest scaled difference between the two forms.
    pub discrepancy: Option<f64>,
}

/// Tolerance on the agreement of the two coefficient formulas.
pub const COEFFICIENT_AGREEMENT_TOL: f64 = 1e-11;

impl RecoveryCoefficients {
    pub fn forms_agree(&self) -> Option<bool> {
        self.discrepancy.map(|d| d <= COEFFICIENT_AGREEMENT_TOL)
    }
}

/// `c_k = (∫ r_x^k w_{k+1}) / w_{k+1}(x)`; for trivial weights the factorial
/// moments are computed as well and compared.
pub fn recovery_coefficients(chain: &KernelChain) -> Result<RecoveryCoefficients> {
    let n = chain.order();
    let x = chain.node();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let w = chain.weights.weight(k + 1);
        let integral = chain.kernel(k).multiply(w)?.integral();
        values.push(integral / w.value(x));
    }
    if !chain.weights.is_trivial() {
        return Ok(RecoveryCoefficients { values, moment_form: None, discrepancy: None });
    }
    let mass: f64 = chain.p.lq_norm(crate::Exponent::ONE);
    let len = chain.domain().length();
    let mut moments = Vec::with_capacity(n);
    let mut discrepancy = 0.0f64;
    let mut factorial = 1.0;
    for (k, &c) in values.iter().enumerate() {
        if k > 0 {
            factorial *= k as f64;
        }
        let m = moment(&chain.p, x, k)?;
        let scale = (mass * len.powi(k as i32) / factorial).max(c.abs()).max(m.abs()).max(f64::MIN_POSITIVE);
        discrepancy = discrepancy.max((c - m).abs() / scale);
        moments.push(m);
    }
    Ok(RecoveryCoefficients { values, moment_form: Some(moments), discrepancy: Some(discrepancy) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn one() -> PiecewisePolynomial {
        PiecewisePolynomial::constant(unit(), 1.0)
    }

    fn assert_pieces(pp: &PiecewisePolynomial, breakpoints: &[f64], pieces: &[&[f64]], tol: f64) {
        assert_eq!(pp.breakpoints(), breakpoints);
        assert_eq!(pp.piece_count(), pieces.len());
        for (got, want) in pp.pieces().iter().zip(pieces) {
            let len = got.len().max(want.len());
            for j in 0..len {
                let g = got.get(j).copied().unwrap_or(0.0);
                let w = want.get(j).copied().unwrap_or(0.0);
                assert!((g - w).abs() <= tol, "{:?} vs {:?}", pp.pieces(), pieces);
            }
        }
    }

    #[test]
    fn kernel_step_examples() {
        let r = kernel_step(&one(), &one(), 0.5).unwrap();
        assert_pieces(&r, &[0.0, 0.5, 1.0], &[&[0.0, -1.0], &[1.0, -1.0]], 0.0);

        let r = kernel_step(&one(), &one(), 0.0).unwrap();
        assert_pieces(&r, &[0.0, 1.0], &[&[1.0, -1.0]], 0.0);

        let w = PiecewisePolynomial::polynomial(unit(), vec![1.0, 1.0]).unwrap();
        let r = kernel_step(&one(), &w, 1.0).unwrap();
        assert_pieces(&r, &[0.0, 1.0], &[&[0.0, -1.0, -0.5]], 0.0);
    }

    #[test]
    fn kernel_step_rejects_nonpositive_weight() {
        let w = PiecewisePolynomial::polynomial(unit(), vec![-0.5, 1.0]).unwrap();
        match kernel_step(&one(), &w, 0.5) {
            Err(Error::NonPositiveWeight { at, value, .. }) => {
                assert_eq!(at, 0.0);
                assert_eq!(value, -0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn build_chain_examples() {
        let ws = WeightSystem::trivial(unit(), 2);
        let chain = build_chain(&one(), &ws, 0.5, 2).unwrap();
        assert_pieces(chain.kernel(2), &[0.0, 0.5, 1.0], &[&[0.0, 0.0, 0.5], &[0.5, -1.0, 0.5]], 1e-16);

        let chain = build_chain(&one(), &ws, 0.5, 0).unwrap();
        assert_eq!(chain.chain(), &[one()]);

        let chain = build_chain(&one(), &ws, 0.0, 1).unwrap();
        assert_pieces(chain.kernel(1), &[0.0, 1.0], &[&[1.0, -1.0]], 0.0);
    }

    #[test]
    fn build_chain_needs_enough_weights() {
        let ws = WeightSystem::trivial(unit(), 1);
        assert!(matches!(build_chain(&one(), &ws, 0.5, 2), Err(Error::TooFewWeights { .. })));
    }

    #[test]
    fn recovery_coefficient_examples() {
        let ws = WeightSystem::trivial(unit(), 2);
        let c = recovery_coefficients(&build_chain(&one(), &ws, 0.5, 2).unwrap()).unwrap();
        assert!((c.values[0] - 1.0).abs() < 1e-15 && c.values[1].abs() < 1e-15);
        assert_eq!(c.forms_agree(), Some(true));

        let c = recovery_coefficients(&build_chain(&one(), &ws, 0.0, 2).unwrap()).unwrap();
        assert!((c.values[0] - 1.0).abs() < 1e-15 && (c.values[1] - 0.5).abs() < 1e-15);

        let t = PiecewisePolynomial::identity(unit());
        let c = recovery_coefficients(&build_chain(&t, &ws, 2.0 / 3.0, 1).unwrap()).unwrap();
        assert!((c.values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weighted_coefficients_have_no_moment_form() {
        let w = PiecewisePolynomial::polynomial(unit(), vec![1.0, 1.0]).unwrap();
        let ws = WeightSystem::new(unit(), vec![w]).unwrap();
        assert!(!ws.is_trivial());
        let c = recovery_coefficients(&build_chain(&one(), &ws, 1.0, 1).unwrap()).unwrap();
        // c_0 = ∫(1 + t) / w(1) = 1.5 / 2
        assert!((c.values[0] - 0.75).abs() < 1e-15);
        assert!(c.moment_form.is_none());
    }

    #[test]
    fn moment_examples() {
        assert!(moment(&one(), 0.5, 1).unwrap().abs() < 1e-16);
        assert!((moment(&one(), 0.5, 2).unwrap() - 1.0 / 24.0).abs() < 1e-16);
        let t = PiecewisePolynomial::identity(unit());
        assert!(moment(&t, 2.0 / 3.0, 1).unwrap().abs() < 1e-16);
    }

    #[test]
    fn chain_json_round_trip() {
        let ws = WeightSystem::trivial(unit(), 2);
        let chain = build_chain(&one(), &ws, 0.25, 2).unwrap();
        let json = serde_json::to_value(&chain).unwrap();
        assert!(json.get("p").is_some() && json.get("chain").unwrap().as_array().unwrap().len() == 3);
        let back: KernelChain = serde_json::from_value(json).unwrap();
        assert_eq!(back, chain);
    }
}
