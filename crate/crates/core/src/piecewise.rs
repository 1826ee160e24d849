//! Piecewise polynomials on a closed interval.
//!
//! Coefficients are stored in ascending powers of the absolute variable `t`
//! (not a piece-local variable), so inserting a breakpoint never touches the
//! coefficients. No continuity is assumed across breakpoints; at an interior
//! breakpoint [`PiecewisePolynomial::evaluate`] uses the piece on the left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::poly;
use crate::quadrature::{integrate_adaptive, kahan_sum};

/// Largest degree allowed on a single piece.
pub const MAX_DEGREE: usize = 64;

const NORM_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn unit() -> Self {
        Interval { a: 0.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { t, a: self.a, b: self.b })
        }
    }

    /// `count + 1` equispaced nodes including both endpoints.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        (0..=count)
            .map(|i| if i == count { self.b } else { self.a + self.length() * i as f64 / count as f64 })
            .collect()
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = Error;

    fn try_from((a, b): (f64, f64)) -> Result<Self> {
        Interval::new(a, b)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.a, i.b)
    }
}

/// Roots of a piecewise polynomial: isolated points plus subintervals on which
/// a piece vanishes identically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Roots {
    pub points: Vec<f64>,
    pub zero_intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise")]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPiecewise {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<RawPiecewise> for PiecewisePolynomial {
    type Error = Error;

    fn try_from(raw: RawPiecewise) -> Result<Self> {
        PiecewisePolynomial::new(raw.breakpoints, raw.pieces)
    }
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Malformed("need at least two breakpoints".into()));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::Malformed("breakpoints must be finite".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(format!("breakpoints must be strictly increasing ({} >= {})", w[0], w[1])));
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(Error::Malformed(format!(
                "{} breakpoints require {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        let mut trimmed = Vec::with_capacity(pieces.len());
        for piece in pieces {
            if piece.iter().any(|c| !c.is_finite()) {
                return Err(Error::Malformed("coefficients must be finite".into()));
            }
            let piece = poly::trim(piece);
            check_degree(&piece)?;
            trimmed.push(piece);
        }
        Ok(PiecewisePolynomial { breakpoints, pieces: trimmed })
    }

    pub fn polynomial(domain: Interval, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(vec![domain.a, domain.b], vec![coefficients])
    }

    pub fn constant(domain: Interval, c: f64) -> Self {
        Self::polynomial(domain, vec![c]).expect("a constant is always valid")
    }

    pub fn zero(domain: Interval) -> Self {
        Self::constant(domain, 0.0)
    }

    /// The identity `t ↦ t`.
    pub fn identity(domain: Interval) -> Self {
        Self::polynomial(domain, vec![0.0, 1.0]).expect("degree 1")
    }

    pub fn domain(&self) -> Interval {
        Interval { a: self.breakpoints[0], b: *self.breakpoints.last().unwrap() }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|c| poly::degree(c)).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|c| poly::is_zero(c))
    }

    /// Index of the piece owning `t`: the left piece at interior breakpoints,
    /// the first piece at `a`.
    pub fn locate(&self, t: f64) -> usize {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        interior.partition_point(|&bp| bp < t)
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.domain().check(t)?;
        Ok(self.value(t))
    }

    /// Evaluation without the domain check; points outside the domain use the
    /// nearest end piece.
    pub fn value(&self, t: f64) -> f64 {
        poly::eval(&self.pieces[self.locate(t)], t)
    }

    /// Value of piece `i` at `t` (useful for one-sided limits at breakpoints).
    pub fn piece_value(&self, i: usize, t: f64) -> f64 {
        poly::eval(&self.pieces[i], t)
    }

    pub fn piece_bounds(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    fn check_same_domain(&self, other: &Self) -> Result<()> {
        let (d1, d2) = (self.domain(), other.domain());
        if d1 != d2 {
            return Err(Error::DomainMismatch(d1.a, d1.b, d2.a, d2.b));
        }
        Ok(())
    }

    /// Inserts extra breakpoints (points outside the open domain are ignored).
    pub fn refine(&self, points: &[f64]) -> Self {
        let domain = self.domain();
        let extra: Vec<f64> = points.iter().copied().filter(|&t| t > domain.a && t < domain.b).collect();
        if extra.is_empty() {
            return self.clone();
        }
        let breakpoints = merge_breakpoints(&self.breakpoints, &extra);
        let pieces = breakpoints.windows(2).map(|w| self.pieces[self.locate(0.5 * (w[0] + w[1]))].clone()).collect();
        PiecewisePolynomial { breakpoints, pieces }
    }

    fn combine(&self, other: &Self, op: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Result<Self> {
        self.check_same_domain(other)?;
        let breakpoints = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let mut pieces = Vec::with_capacity(breakpoints.len() - 1);
        for w in breakpoints.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let piece = poly::trim(op(&self.pieces[self.locate(mid)], &other.pieces[other.locate(mid)]));
            check_degree(&piece)?;
            pieces.push(piece);
        }
        Ok(PiecewisePolynomial { breakpoints, pieces })
    }

    /// Pointwise product; breakpoints are the union of both sets.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.combine(other, poly::mul)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, poly::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |u, v| poly::add(u, &poly::scale(v, -1.0)))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_pieces(|c| poly::scale(c, s))
    }

    pub fn map_pieces(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        PiecewisePolynomial {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|c| poly::trim(f(c))).collect(),
        }
    }

    /// Piecewise derivative (the jumps at breakpoints are discarded).
    pub fn derivative(&self) -> Self {
        self.map_pieces(poly::derivative)
    }

    /// Continuous antiderivative `F` with `F(base) = 0` and `F' = self` on
    /// every piece.
    pub fn antiderivative(&self, base: f64) -> Result<Self> {
        self.domain().check(base)?;
        let raw: Vec<Vec<f64>> = self.pieces.iter().map(|c| poly::antiderivative(c)).collect();
        for piece in &raw {
            check_degree(piece)?;
        }
        // Values of F at the breakpoints, accumulated with compensation.
        let mut node_values = Vec::with_capacity(self.breakpoints.len());
        node_values.push(0.0);
        let mut acc = crate::quadrature::KahanSum::default();
        for (i, p) in raw.iter().enumerate() {
            let (lo, hi) = self.piece_bounds(i);
            acc.add(poly::eval(p, hi) - poly::eval(p, lo));
            node_values.push(acc.total());
        }
        let mut pieces: Vec<Vec<f64>> = raw
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                let lo = self.breakpoints[i];
                p[0] = node_values[i] - poly::eval(&p, lo);
                p
            })
            .collect();
        let i = self.locate(base);
        let shift = {
            let lo = self.breakpoints[i];
            // F(base) = F(lo) + ∫_lo^base piece_i, evaluated from the node value.
            node_values[i] + (poly::eval(&pieces[i], base) - poly::eval(&pieces[i], lo))
        };
        for p in &mut pieces {
            p[0] -= shift;
        }
        Ok(PiecewisePolynomial { breakpoints: self.breakpoints.clone(), pieces })
    }

    /// `∫_c^d self` by the piecewise power rule.
    pub fn definite_integral(&self, c: f64, d: f64) -> Result<f64> {
        let domain = self.domain();
        domain.check(c)?;
        domain.check(d)?;
        if c > d {
            return Err(Error::ReversedBounds { c, d });
        }
        Ok(self.integral_between(c, d))
    }

    pub fn integral(&self) -> f64 {
        let d = self.domain();
        self.integral_between(d.a, d.b)
    }

    fn integral_between(&self, c: f64, d: f64) -> f64 {
        kahan_sum(self.pieces.iter().enumerate().filter_map(|(i, piece)| {
            let (lo, hi) = self.piece_bounds(i);
            let (u, v) = (lo.max(c), hi.min(d));
            (u < v).then(|| {
                let p = poly::antiderivative(piece);
                poly::eval(&p, v) - poly::eval(&p, u)
            })
        }))
    }

    /// Real roots in the domain; identically-zero pieces are reported as
    /// zero intervals instead.
    pub fn real_roots(&self) -> Roots {
        let mut roots = Roots::default();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.piece_bounds(i);
            if poly::is_zero(piece) {
                match roots.zero_intervals.last_mut() {
                    Some(last) if last.1 == lo => last.1 = hi,
                    _ => roots.zero_intervals.push((lo, hi)),
                }
            } else {
                roots.points.extend(poly::roots_in(piece, lo, hi));
            }
        }
        let domain = self.domain();
        let tol = 1e-13 * domain.length().max(domain.a.abs()).max(domain.b.abs());
        roots.points.sort_by(f64::total_cmp);
        roots.points.dedup_by(|next, prev| (*next - *prev).abs() <= tol);
        roots
    }

    /// Critical points of each piece together with the piece endpoints, as
    /// `(piece index, t)` pairs. Every extremum of `|self|` is among them.
    fn candidate_extrema(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.piece_bounds(i);
            out.push((i, lo));
            out.extend(
                poly::roots_in(&poly::derivative(piece), lo, hi)
                    .into_iter()
                    .filter(|&t| t > lo && t < hi)
                    .map(|t| (i, t)),
            );
            out.push((i, hi));
        }
        out
    }

    /// Location and value of `max |self|`, taking one-sided limits at
    /// breakpoints. Returns `(t, |value|, piece index)`.
    pub fn sup_location(&self) -> (f64, f64, usize) {
        self.candidate_extrema()
            .into_iter()
            .map(|(i, t)| (t, self.piece_value(i, t).abs(), i))
            .fold((self.domain().a, -1.0, 0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    /// Smallest value (one-sided limits included) and where it occurs.
    pub fn min_value(&self) -> (f64, f64) {
        self.candidate_extrema()
            .into_iter()
            .map(|(i, t)| (t, self.piece_value(i, t)))
            .fold((self.domain().a, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Breakpoints together with all isolated roots: on every resulting
    /// subinterval the function is a single polynomial of constant sign.
    pub fn sign_split_points(&self) -> Vec<f64> {
        merge_breakpoints(&self.breakpoints, &self.real_roots().points)
    }

    /// `‖self‖_{L_{q'}}` over the whole domain.
    pub fn lq_norm(&self, qprime: Exponent) -> f64 {
        if qprime.is_infinite() {
            return self.sup_location().1.max(0.0);
        }
        let split = self.sign_split_points();
        if qprime.is_one() {
            let sup = self.refine(&split);
            return kahan_sum(sup.pieces.iter().enumerate().map(|(i, piece)| {
                let (lo, hi) = sup.piece_bounds(i);
                let p = poly::antiderivative(piece);
                (poly::eval(&p, hi) - poly::eval(&p, lo)).abs()
            }));
        }
        let s = qprime.value();
        let sup = self.sup_location().1;
        if sup == 0.0 {
            return 0.0;
        }
        let abs_tol = 1e-15 * sup.powf(s) * self.domain().length();
        // Each piece re-expanded about the midpoint of its subinterval.
        let local: Vec<(f64, Vec<f64>)> = split
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (mid, poly::taylor_shift(&self.pieces[self.locate(mid)], mid))
            })
            .collect();
        let interior = &split[1..split.len() - 1];
        let integrand = |t: f64| {
            let (mid, c) = &local[interior.partition_point(|&bp| bp < t)];
            poly::eval(c, t - mid).abs().powf(s)
        };
        let result = integrate_adaptive(&integrand, &split, NORM_REL_TOL, abs_tol);
        result.value.powf(1.0 / s)
    }
}

fn check_degree(piece: &[f64]) -> Result<()> {
    let degree = poly::degree(piece);
    if degree > MAX_DEGREE {
        return Err(Error::DegreeCap { degree, cap: MAX_DEGREE });
    }
    Ok(())
}

/// Sorted union of two increasing sequences, exact duplicates removed.
pub(crate) fn merge_breakpoints(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().chain(v).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
