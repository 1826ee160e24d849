//! Executable checks of the bounds.
//!
//! Each sharp constant rests on three facts: the error is dominated by a
//! functional of `D_n f` for every `f` in the class, that domination is an
//! equality on a large subfamily, and the subfamily contains (asymptotic)
//! maximizers of the functional. This module checks the representation
//! identities behind the first two numerically, builds the maximizers, and
//! audits the bounds on random class members.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_at, bound_balanced, BoundReport, ClassSpec};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::holder::ModulusSpec;
use crate::kernel::{build_chain, moment, recovery_coefficients, KernelChain, WeightSystem};
use crate::piecewise::{merge_breakpoints, Interval, PiecewisePolynomial};
use crate::poly;

/// Width of the `q = 1` spike, relative to `b − a`.
pub const SPIKE_WIDTH: f64 = 1e-4;

/// Uniform panels of the sampled (non-polynomial) reconstruction path.
pub const SAMPLED_PANELS: usize = 10_000;

/// Audit trials with ratio above `1 + AUDIT_TOL` count as violations.
pub const AUDIT_TOL: f64 = 1e-9;

/// Random Sobolev audit functions: pieces per mesh and maximal degree.
pub const AUDIT_PIECES: usize = 8;
pub const AUDIT_MAX_DEGREE: usize = 6;

/// Panel counts of the random broken lines in Hölder audits.
pub const HOLDER_MESH: (usize, usize) = (4, 64);

/// What is known about the class membership of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassTag {
    /// `‖D_n f‖_q = norm`.
    Lq {
        q: Exponent,
        norm: f64,
    },
    /// `max |g(s) − g(t)| / ω(|s − t|)` over mesh pairs, `g = f^{(n)}`.
    Holder {
        compliance: f64,
    },
    Untagged,
}

/// A function `f` together with `D_0 f, …, D_n f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub f: PiecewisePolynomial,
    pub derivative_chain: Vec<PiecewisePolynomial>,
    pub class_tag: ClassTag,
}

impl TestFunction {
    /// Derivative chain of `f` for the given weights, computed by exact
    /// piecewise division `D_k f = (D_{k−1} f / w_k)'`. Fails when a division
    /// leaves a remainder.
    pub fn from_function(f: PiecewisePolynomial, weights: &WeightSystem, n: usize) -> Result<Self> {
        let weights = weights.truncate(n)?;
        let mut chain = vec![f.clone()];
        for k in 1..=n {
            let prev = &chain[k - 1];
            let next = if weights.is_trivial() {
                prev.derivative()
            } else {
                divide_exact(prev, weights.weight(k))?.derivative()
            };
            chain.push(next);
        }
        Ok(TestFunction { f, derivative_chain: chain, class_tag: ClassTag::Untagged })
    }

    /// `D_n f`.
    pub fn top(&self) -> &PiecewisePolynomial {
        self.derivative_chain.last().expect("chain holds at least f")
    }
}

fn divide_exact(num: &PiecewisePolynomial, den: &PiecewisePolynomial) -> Result<PiecewisePolynomial> {
    let refined_num = num.refine(den.breakpoints());
    let refined_den = den.refine(num.breakpoints());
    let mut pieces = Vec::with_capacity(refined_num.piece_count());
    for (u, v) in refined_num.pieces().iter().zip(refined_den.pieces()) {
        let (q, r) = poly::div_rem(u, v);
        let size = u.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
        let rem = r.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if rem > 1e-9 * size {
            return Err(Error::Degenerate(format!("inexact division (remainder {rem:e})")));
        }
        pieces.push(q);
    }
    PiecewisePolynomial::new(refined_num.breakpoints().to_vec(), pieces)
}

/// The top derivative `D_n f` handed to [`reconstruct_from_derivative`].
pub enum Derivative<'a> {
    Exact(PiecewisePolynomial),
    /// An arbitrary integrable function, replaced by its piecewise-linear
    /// fit at the two Gauss points of each panel. Panels are the
    /// [`SAMPLED_PANELS`] uniform ones refined by `breaks` (place
    /// discontinuities there).
    Sampled {
        domain: Interval,
        g: &'a (dyn Fn(f64) -> f64 + Sync),
        breaks: &'a [f64],
    },
}

/// Piecewise-linear fit through the two Gauss–Legendre points of every panel.
pub fn sample_piecewise_linear(
    domain: Interval,
    g: &(dyn Fn(f64) -> f64 + Sync),
    breaks: &[f64],
    panels: usize,
) -> PiecewisePolynomial {
    let uniform = domain.grid(panels);
    let inner: Vec<f64> = breaks.iter().copied().filter(|&t| domain.contains(t)).collect();
    let nodes = merge_breakpoints(&uniform, &inner);
    let offset = 0.5 / 3f64.sqrt();
    let pieces = nodes
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let (mid, half) = (0.5 * (lo + hi), hi - lo);
            let (t1, t2) = (mid - offset * half, mid + offset * half);
            let (g1, g2) = (g(t1), g(t2));
            let slope = (g2 - g1) / (t2 - t1);
            vec![g1 - slope * t1, slope]
        })
        .collect();
    PiecewisePolynomial::new(nodes, pieces).expect("nodes are sorted and distinct")
}

/// Builds `f` with `D_n f = g`: starting from `g`, alternately take the
/// antiderivative vanishing at `a` and multiply by `w_k`, for `k = n, …, 1`.
pub fn reconstruct_from_derivative(g: &Derivative<'_>, weights: &WeightSystem, n: usize) -> Result<TestFunction> {
    let weights = weights.truncate(n)?;
    let top = match g {
        Derivative::Exact(pp) => pp.clone(),
        Derivative::Sampled { domain, g, breaks } => sample_piecewise_linear(*domain, *g, breaks, SAMPLED_PANELS),
    };
    if top.domain() != weights.domain() {
        let (d1, d2) = (top.domain(), weights.domain());
        return Err(Error::DomainMismatch(d1.a(), d1.b(), d2.a(), d2.b()));
    }
    let a = top.domain().a();
    let mut reversed = vec![top];
    for k in (1..=n).rev() {
        let integral = reversed.last().unwrap().antiderivative(a)?;
        let next = if weights.is_trivial() { integral } else { integral.multiply(weights.weight(k))? };
        reversed.push(next);
    }
    reversed.reverse();
    Ok(TestFunction { f: reversed[0].clone(), derivative_chain: reversed, class_tag: ClassTag::Untagged })
}

/// `Λf − If = ∫ p f − Σ c_k (D_k f)(x)`.
pub fn recovery_error(chain: &KernelChain, coefficients: &[f64], f: &TestFunction) -> Result<f64> {
    let x = chain.node();
    let integral = chain.p().multiply(&f.f)?.integral();
    let formula: f64 = coefficients.iter().zip(&f.derivative_chain).map(|(c, dk)| c * dk.value(x)).sum();
    Ok(integral - formula)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Compares `∫ p f − Σ c_k D_k f(x)` with `∫ r_x^n D_n f`.
pub fn verify_representation(
    p: &PiecewisePolynomial,
    weights: &WeightSystem,
    x: f64,
    f: &TestFunction,
    n: usize,
) -> Result<Residual> {
    if f.derivative_chain.len() < n + 1 {
        return Err(Error::arg(
            "derivative_chain",
            format!("need D_0 f..D_{n} f, got {} entries", f.derivative_chain.len()),
        ));
    }
    let chain = build_chain(p, weights, x, n)?;
    let coefficients = recovery_coefficients(&chain)?;
    let lhs = recovery_error(&chain, &coefficients.values, f)?;
    let rhs = chain.last().multiply(&f.derivative_chain[n])?.integral();
    Ok(Residual { lhs, rhs, residual: (lhs - rhs).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub max_residual: f64,
    /// `max_k (1 + |moment_k| + ‖r^k‖_1)`.
    pub scale: f64,
}

/// `max_{1 ≤ k ≤ kmax} |∫ r_x^k − (1/k!) ∫ p (t − x)^k|` for trivial weights.
pub fn verify_moment_identity(p: &PiecewisePolynomial, x: f64, kmax: usize) -> Result<MomentCheck> {
    if kmax == 0 {
        return Err(Error::arg("kmax", "need kmax >= 1"));
    }
    let chain = build_chain(p, &WeightSystem::trivial(p.domain(), kmax), x, kmax)?;
    let mut check = MomentCheck { max_residual: 0.0, scale: 1.0 };
    for k in 1..=kmax {
        let r = chain.kernel(k);
        let m = moment(p, x, k)?;
        check.max_residual = check.max_residual.max((r.integral() - m).abs());
        check.scale = check.scale.max(1.0 + m.abs() + r.lq_norm(Exponent::ONE));
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub function: TestFunction,
    pub ratio: f64,
    pub constant: f64,
    pub construction: &'static str,
}

/// Maximizing (or, for `q = 1`, nearly maximizing) `D_n f` for
/// `g ↦ ∫ r_x^n g` over the unit ball of `L_q`, and the ratio of the
/// resulting recovery error to the constant `‖r_x^n‖_{q'}`.
pub fn extremal_function(chain: &KernelChain, q: Exponent) -> Result<Extremal> {
    let r = chain.last();
    if r.is_zero() {
        return Err(Error::Degenerate("the kernel vanishes identically".into()));
    }
    let n = chain.order();
    let constant = r.lq_norm(q.conjugate());
    let (g, construction) = if q.is_infinite() {
        (sign_function(r), "sign")
    } else if q.value() == 2.0 {
        (r.scale(1.0 / constant), "proportional")
    } else if q.is_one() {
        (spike(r)?, "spike")
    } else {
        let qp = q.conjugate().value();
        let norm_pow = constant.powf(qp - 1.0);
        let split = r.sign_split_points();
        let dual = |t: f64| {
            let v = r.value(t);
            v.signum() * v.abs().powf(qp - 1.0) / norm_pow
        };
        let sampled = sample_piecewise_linear(r.domain(), &dual, &split, SAMPLED_PANELS);
        (sampled, "dual_power_sampled")
    };
    // Rescale to the unit sphere of L_q so that f is a class member.
    let norm = g.lq_norm(q);
    let g = g.scale(1.0 / norm);
    let mut function = reconstruct_from_derivative(&Derivative::Exact(g), chain.weights(), n)?;
    function.class_tag = ClassTag::Lq { q, norm: 1.0 };
    let coefficients = recovery_coefficients(chain)?;
    let error = recovery_error(chain, &coefficients.values, &function)?;
    Ok(Extremal { ratio: error.abs() / constant, function, constant, construction })
}

fn sign_function(r: &PiecewisePolynomial) -> PiecewisePolynomial {
    let split = r.refine(&r.sign_split_points());
    let pieces = (0..split.piece_count())
        .map(|i| {
            let (lo, hi) = split.piece_bounds(i);
            let s = split.piece_value(i, 0.5 * (lo + hi));
            vec![if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            }]
        })
        .collect();
    PiecewisePolynomial::new(split.breakpoints().to_vec(), pieces).expect("same breakpoints")
}

/// Unit-mass triangular spike of width `SPIKE_WIDTH (b − a)` at the maximum
/// of `|r|`, one-sided when the maximum sits at a piece end.
fn spike(r: &PiecewisePolynomial) -> Result<PiecewisePolynomial> {
    let (t, _, piece) = r.sup_location();
    let (lo, hi) = r.piece_bounds(piece);
    let width = (SPIKE_WIDTH * r.domain().length()).min(hi - lo);
    let sign = r.piece_value(piece, t).signum();
    let height = 2.0 / width;
    // Ramp through (t0, 0) and (t1, h): slope h / (t1 − t0).
    let ramp = |t0: f64, t1: f64| {
        let slope = sign * height / (t1 - t0);
        vec![-slope * t0, slope]
    };
    let domain = r.domain();
    let (breakpoints, pieces): (Vec<f64>, Vec<Vec<f64>>) = if t - lo < 0.5 * width {
        let end = lo + width;
        (vec![lo, end], vec![ramp(end, lo)])
    } else if hi - t < 0.5 * width {
        let start = hi - width;
        (vec![start, hi], vec![ramp(start, hi)])
    } else {
        let (start, end) = (t - 0.5 * width, t + 0.5 * width);
        (vec![start, t, end], vec![ramp(start, t), ramp(end, t)])
    };
    let mut all_bp = vec![domain.a()];
    let mut all_pieces = Vec::new();
    if breakpoints[0] > domain.a() {
        all_pieces.push(vec![0.0]);
        all_bp.push(breakpoints[0]);
    }
    for (i, piece) in pieces.into_iter().enumerate() {
        all_pieces.push(piece);
        all_bp.push(breakpoints[i + 1]);
    }
    if *all_bp.last().unwrap() < domain.b() {
        all_pieces.push(vec![0.0]);
        all_bp.push(domain.b());
    }
    PiecewisePolynomial::new(all_bp, all_pieces)
}

/// Result of a randomized audit of a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub max_ratio: f64,
    pub violations: usize,
    pub seed: u64,
    pub constant: f64,
    pub node: f64,
    /// Ratio of trial 0 when it carries an extremal function.
    pub extremal_ratio: Option<f64>,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Random piecewise polynomial: `AUDIT_PIECES` pieces of random width and
/// degree up to `AUDIT_MAX_DEGREE`, standard normal coefficients in the
/// piece-local variable.
pub fn random_piecewise(domain: Interval, rng: &mut impl Rng) -> PiecewisePolynomial {
    let widths: Vec<f64> = (0..AUDIT_PIECES).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = widths.iter().sum();
    let mut breakpoints = vec![domain.a()];
    let mut acc = 0.0;
    for w in &widths[..AUDIT_PIECES - 1] {
        acc += w;
        breakpoints.push(domain.a() + domain.length() * acc / total);
    }
    breakpoints.push(domain.b());
    let pieces = breakpoints
        .windows(2)
        .map(|w| {
            let degree = rng.random_range(0..=AUDIT_MAX_DEGREE);
            let local: Vec<f64> = (0..=degree).map(|_| rng.sample(StandardNormal)).collect();
            local_to_absolute(&local, 0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]))
        })
        .collect();
    PiecewisePolynomial::new(breakpoints, pieces).expect("breakpoints are increasing")
}

/// Coefficients in `t` of `Σ a_j ((t − mid) / half)^j`.
fn local_to_absolute(local: &[f64], mid: f64, half: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    for (j, &aj) in local.iter().enumerate() {
        let term = poly::scale(&poly::shifted_power(mid, j), aj / half.powi(j as i32));
        out = poly::add(&out, &term);
    }
    out
}

/// Random broken line `g` in `H^ω` on a uniform mesh: increments of `±ω(h)`
/// clipped so that every pair of mesh values respects `ω`. For concave `ω`
/// this certifies membership on the whole interval. Returns `g` and its
/// compliance (largest pairwise ratio over the mesh).
pub fn random_holder_line(domain: Interval, omega: &ModulusSpec, rng: &mut impl Rng) -> (PiecewisePolynomial, f64) {
    let panels = rng.random_range(HOLDER_MESH.0..=HOLDER_MESH.1);
    let nodes = domain.grid(panels);
    let step = omega.eval(domain.length() / panels as f64);
    let mut values: Vec<f64> = vec![rng.sample::<f64, _>(StandardNormal)];
    for i in 1..=panels {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let target = values[i - 1] + sign * step;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (j, &vj) in values.iter().enumerate() {
            let reach = omega.eval(nodes[i] - nodes[j]);
            lo = lo.max(vj - reach);
            hi = hi.min(vj + reach);
        }
        let v = if lo <= hi { target.clamp(lo, hi) } else { values[i - 1] };
        values.push(v);
    }
    let compliance = (0..=panels)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (values[i] - values[j]).abs() / omega.eval(nodes[i] - nodes[j]))
        .fold(0.0f64, f64::max);
    let pieces = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| {
            let slope = (v[1] - v[0]) / (t[1] - t[0]);
            vec![v[0] - slope * t[0], slope]
        })
        .collect();
    (PiecewisePolynomial::new(nodes, pieces).expect("uniform mesh"), compliance)
}

/// Extremal `g` injected as trial 0, when one is available.
fn extremal_top(report: &BoundReport, spec: &ClassSpec) -> Result<Option<PiecewisePolynomial>> {
    match spec {
        ClassSpec::Sobolev { q, .. } | ClassSpec::WeightedOperator { q, .. } if !q.is_one() => {
            Ok(Some(extremal_function(&report.kernel, *q)?.function.top().clone()))
        }
        ClassSpec::Holder { modulus, .. } => Ok(modulus.linear_constant().map(|k| {
            // g = K t attains the bound for ω(u) = K u.
            PiecewisePolynomial::polynomial(report.kernel.domain(), vec![0.0, k]).expect("degree 1")
        })),
        _ => Ok(None),
    }
}

/// Draws `trials` members of the class, reconstructs `f`, and compares the
/// recovery error with the bound. Trial `i` uses a generator derived from
/// `(seed, i)` only, so the report is independent of scheduling.
///
/// `x` is required for Sobolev and weighted classes; for Hölder classes the
/// balancing node is used and a supplied `x` is only checked.
pub fn monte_carlo_audit(
    p: &PiecewisePolynomial,
    spec: &ClassSpec,
    x: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::arg("trials", "need at least one trial"));
    }
    let report = match (spec, x) {
        (ClassSpec::Holder { .. }, None) => bound_balanced(p, spec)?,
        (_, Some(x)) => bound_at(p, spec, x)?,
        (_, None) => return Err(Error::arg("x", "a node is required for this class")),
    };
    let chain = &report.kernel;
    let weights = spec.weight_system(p)?;
    let n = spec.order();
    let domain = p.domain();
    let extremal = extremal_top(&report, spec)?;

    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let g = match (&extremal, trial) {
                (Some(g), 0) => g.clone(),
                _ => {
                    let mut rng = trial_rng(seed, trial);
                    match spec {
                        ClassSpec::Holder { modulus, .. } => random_holder_line(domain, modulus, &mut rng).0,
                        ClassSpec::Sobolev { q, .. } | ClassSpec::WeightedOperator { q, .. } => {
                            let mut g = random_piecewise(domain, &mut rng);
                            while g.is_zero() {
                                g = random_piecewise(domain, &mut rng);
                            }
                            let norm = g.lq_norm(*q);
                            g.scale(1.0 / norm)
                        }
                    }
                }
            };
            let f = reconstruct_from_derivative(&Derivative::Exact(g), &weights, n)?;
            let error = recovery_error(chain, &report.coefficients, &f)?;
            Ok(error.abs() / report.constant)
        })
        .collect::<Result<_>>()?;

    Ok(AuditReport {
        trials,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        violations: ratios.iter().filter(|&&r| r > 1.0 + AUDIT_TOL).count(),
        seed,
        constant: report.constant,
        node: report.node,
        extremal_ratio: extremal.map(|_| ratios[0]),
    })
}
