//! Multivariate one-point constants.
//!
//! On the cube `□ = [−1, 1]^d` with `|∇f|_1` measured in `L_q`, `q > d`:
//!
//! ```text
//! |∫_□ f − 2^d f(0)| ≤ (1/d) ‖ |y|_∞^{1−d} − |y|_∞ ‖_{L_{q'}(□)} ‖ |∇f|_1 ‖_{L_q(□)}.
//! ```
//!
//! The norm is reduced to one dimension with
//! `∫_□ g(|y|_∞) dy = 2^d d ∫_0^1 g(u) u^{d−1} du`.
//!
//! For the unit ball and functions of bounded variation only the normalized
//! constant `v/2` is provided; the variation functional itself is not
//! implemented.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::quadrature::{integrate, KahanSum};

const CUBE_REL_TOL: f64 = 1e-13;

/// Samples per independently seeded Monte-Carlo block.
const BLOCK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeSpec {
    d: usize,
    q: Exponent,
}

impl CubeSpec {
    pub fn new(d: usize, q: Exponent) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg("d", format!("dimension must be at least 2, got {d}")));
        }
        if q.value() <= d as f64 {
            return Err(Error::arg("q", format!("need q > d = {d} for a finite constant, got {q}")));
        }
        Ok(CubeSpec { d, q })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn exponent(&self) -> Exponent {
        self.q
    }

    fn qprime(&self) -> f64 {
        self.q.conjugate().value()
    }
}

/// `‖ |y|_∞^{1−d} − |y|_∞ ‖_{L_{q'}(□)}^{q'}` by the radial reduction.
///
/// The substitution `u = v^{1/β}`, `β = d − (d−1) q'`, absorbs the
/// singular factor `u^{(1−d) q' + d − 1}`, leaving `(1/β)(1 − u^d)^{q'}`.
pub fn cube_norm_power(spec: &CubeSpec) -> f64 {
    let d = spec.d as f64;
    let qp = spec.qprime();
    let beta = d - (d - 1.0) * qp;
    let integrand = |v: f64| (1.0 - v.powf(d / beta)).max(0.0).powf(qp) / beta;
    let radial = integrate(integrand, 0.0, 1.0, CUBE_REL_TOL).value;
    2f64.powi(spec.d as i32) * d * radial
}

/// The constant through the quadrature path, for every admissible `q`.
pub fn cube_constant_quadrature(spec: &CubeSpec) -> f64 {
    cube_norm_power(spec).powf(1.0 / spec.qprime()) / spec.d as f64
}

/// The sharp constant; `q = ∞` uses the closed form `2^d d / (d + 1)`.
pub fn cube_constant(spec: &CubeSpec) -> f64 {
    if spec.q.is_infinite() {
        let d = spec.d as f64;
        2f64.powi(spec.d as i32) * d / (d + 1.0)
    } else {
        cube_constant_quadrature(spec)
    }
}

/// Normalized ball constant: `|mean of f over B^d − f(0)| ≤ v / 2`.
pub fn ball_bv_bound(v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::arg("v", format!("variation must be a finite nonnegative number, got {v}")));
    }
    Ok(v / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarloEstimate {
    /// Distance to `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.std_error
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Runs `sample` over `samples` draws split into seeded blocks; block
/// statistics are merged in block order, so the result does not depend on
/// scheduling.
fn monte_carlo<F>(samples: usize, seed: u64, sample: F) -> MonteCarloEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK.min(samples - b * BLOCK);
            let (mut sum, mut sum_sq) = (KahanSum::default(), KahanSum::default());
            for _ in 0..count {
                let v = sample(&mut rng);
                sum.add(v);
                sum_sq.add(v * v);
            }
            (sum.total(), sum_sq.total())
        })
        .collect();
    let (mut sum, mut sum_sq) = (KahanSum::default(), KahanSum::default());
    for (s, s2) in partial {
        sum.add(s);
        sum_sq.add(s2);
    }
    let n = samples as f64;
    let mean = sum.total() / n;
    let variance = ((sum_sq.total() / n) - mean * mean).max(0.0) * n / (n - 1.0);
    MonteCarloEstimate { mean, std_error: (variance / n).sqrt(), samples }
}

/// `π^{d/2} / Γ(d/2 + 1)`, the volume of the Euclidean unit ball.
fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(d/2 + 1) by the recurrence from Γ(1) = 1 or Γ(1/2) = √π.
    let mut gamma = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut z = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while z < d as f64 / 2.0 + 1.0 - 1e-9 {
        gamma *= z;
        z += 1.0;
    }
    PI.powf(d as f64 / 2.0) / gamma
}

/// Importance-sampled Monte-Carlo estimate of
/// `∫_□ (|y|_∞^{1−d} − |y|_∞)^{q'} dy`.
///
/// Points are drawn in the Euclidean ball of radius `√d` with density
/// proportional to `|y|_2^{−s}`, `s = (d−1) q'`, which matches the singularity
/// at the origin and keeps the estimator variance finite. Points outside the
/// cube contribute zero. No use is made of the `|·|_∞` radial reduction.
pub fn monte_carlo_cube_norm_power(spec: &CubeSpec, samples: usize, seed: u64) -> MonteCarloEstimate {
    let d = spec.d;
    let df = d as f64;
    let qp = spec.qprime();
    let s = (df - 1.0) * qp;
    let radius = df.sqrt();
    // ∫_{B(0,R)} |y|^{−s} dy = d · vol(B_1) · R^{d−s} / (d − s)
    let normalizer = df * unit_ball_volume(d) * radius.powf(df - s) / (df - s);
    monte_carlo(samples, seed, |rng| {
        let mut y: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = radius * u.powf(1.0 / (df - s));
        y.iter_mut().for_each(|v| *v *= r / norm);
        let sup = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup > 1.0 {
            return 0.0;
        }
        let g = sup.powf(1.0 - df) - sup;
        g.powf(qp) * r.powf(s) * normalizer
    })
}

/// Plain Monte-Carlo estimate of `∫_□ |y|_∞^k dy` by uniform sampling.
pub fn monte_carlo_radial_moment(d: usize, k: f64, samples: usize, seed: u64) -> MonteCarloEstimate {
    let volume = 2f64.powi(d as i32);
    monte_carlo(samples, seed, |rng| {
        let sup = (0..d).map(|_| (2.0 * rng.random::<f64>() - 1.0).abs()).fold(0.0f64, f64::max);
        volume * sup.powf(k)
    })
}

/// `∫_□ |y|_∞^k dy = 2^d d / (k + d)` from the radial reduction.
pub fn radial_moment(d: usize, k: f64) -> f64 {
    2f64.powi(d as i32) * d as f64 / (k + d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, q: f64) -> CubeSpec {
        CubeSpec::new(d, Exponent::new(q).unwrap()).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert!((cube_constant(&spec(2, f64::INFINITY)) - 8.0 / 3.0).abs() < 1e-15);
        assert!((cube_constant(&spec(3, f64::INFINITY)) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_closed_form_at_infinity() {
        for d in 2..=6 {
            let s = spec(d, f64::INFINITY);
            let rel = (cube_constant_quadrature(&s) - cube_constant(&s)).abs() / cube_constant(&s);
            assert!(rel < 1e-12, "d = {d}: {rel}");
        }
    }

    #[test]
    fn matches_reference_quadrature() {
        // Reference values from an independent adaptive quadrature of the
        // untransformed radial integrand (QUADPACK, relative tolerance 1e-13).
        let reference = [
            (2, 3.0, 2.6187825800776388),
            (2, 4.0, 2.4846301249834757),
            (3, 4.0, 7.493971575015279),
            (3, 6.0, 6.076217020218021),
            (4, 8.0, 13.666830227955145),
        ];
        for (d, q, want) in reference {
            let got = cube_constant(&spec(d, q));
            assert!((got - want).abs() < 1e-10 * want, "d = {d}, q = {q}: {got} vs {want}");
        }
    }

    #[test]
    fn monotone_in_q_for_d_at_least_three() {
        for d in [3usize, 4] {
            let qs = [d as f64 + 1.0, 2.0 * d as f64, f64::INFINITY];
            let vals: Vec<f64> = qs.iter().map(|&q| cube_constant(&spec(d, q))).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "d = {d}: {vals:?}");
        }
    }

    #[test]
    fn not_monotone_in_q_for_d_two() {
        // The cube has measure 2^d > 1, so the classes are not nested in q and
        // the constant dips below its q = ∞ value at q = 2d.
        let at = |q: f64| cube_constant(&spec(2, q));
        assert!(at(3.0) > at(4.0));
        assert!(at(4.0) < at(f64::INFINITY));
    }

    #[test]
    fn rejects_small_q() {
        assert!(CubeSpec::new(2, Exponent::new(2.0).unwrap()).is_err());
        assert!(CubeSpec::new(3, Exponent::new(2.5).unwrap()).is_err());
        assert!(CubeSpec::new(1, Exponent::INFINITY).is_err());
    }

    #[test]
    fn ball_examples() {
        assert_eq!(ball_bv_bound(1.0).unwrap(), 0.5);
        assert_eq!(ball_bv_bound(0.0).unwrap(), 0.0);
        assert_eq!(ball_bv_bound(3.0).unwrap(), 1.5);
        assert!(ball_bv_bound(-1.0).is_err());
    }

    #[test]
    fn ball_volume() {
        use std::f64::consts::PI;
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let s = spec(2, 3.0);
        let a = monte_carlo_cube_norm_power(&s, 50_000, 11);
        let b = monte_carlo_cube_norm_power(&s, 50_000, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn small_monte_carlo_agrees_within_one_percent() {
        let s = spec(2, 3.0);
        let mc = monte_carlo_cube_norm_power(&s, 200_000, 3);
        let qp = 1.5;
        let mc_constant = mc.mean.powf(1.0 / qp) / 2.0;
        assert!((mc_constant - cube_constant(&s)).abs() < 0.01 * cube_constant(&s));
    }
}
