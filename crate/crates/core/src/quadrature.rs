//! Gauss–Legendre rules and a globally adaptive integrator.
//!
//! The adaptive scheme compares the one-panel estimate of each panel with the
//! sum of its two halves and keeps bisecting the panel with the largest
//! discrepancy until the summed discrepancy falls below the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Number of nodes of the per-panel rule.
pub const PANEL_ORDER: usize = 15;

const MAX_PANELS: usize = 200_000;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pn_1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (z * pn - pn_1) / (z * z - 1.0);
    (pn, d)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Fixed-order Gauss–Legendre estimate on `[lo, hi]`.
pub fn gauss_panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = panel_rule();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut sum = KahanSum::default();
    for (z, w) in nodes.iter().zip(weights) {
        sum.add(w * f(mid + half * z));
    }
    half * sum.total()
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<KahanSum>().total()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn refine<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, coarse: f64) -> Panel {
    let mid = 0.5 * (lo + hi);
    let fine = gauss_panel(f, lo, mid) + gauss_panel(f, mid, hi);
    Panel { lo, hi, value: fine, error: (fine - coarse).abs() }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, with the initial panels
/// given by consecutive `breaks`.
///
/// Terminates once the summed panel discrepancy is at most
/// `max(rel_tol · |estimate|, abs_tol)`, or the panel budget is exhausted.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> QuadResult {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi > lo {
            heap.push(refine(f, lo, hi, gauss_panel(f, lo, hi)));
        }
    }
    loop {
        let total: f64 = kahan_sum(heap.iter().map(|p| p.value));
        let error: f64 = kahan_sum(heap.iter().map(|p| p.error));
        if error <= (rel_tol * total.abs()).max(abs_tol) || heap.len() >= MAX_PANELS {
            return finish(heap, error);
        }
        // Refine a batch of the worst panels before re-summing.
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Cannot split further in floating point; freeze it.
                heap.push(Panel { error: 0.0, ..worst });
                continue;
            }
            let left_coarse = gauss_panel(f, worst.lo, mid);
            let right_coarse = gauss_panel(f, mid, worst.hi);
            heap.push(refine(f, worst.lo, mid, left_coarse));
            heap.push(refine(f, mid, worst.hi, right_coarse));
        }
    }
}

fn finish(heap: BinaryHeap<Panel>, error: f64) -> QuadResult {
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    QuadResult { value: kahan_sum(panels.iter().map(|p| p.value)), error, panels: panels.len() }
}

/// Convenience wrapper over a single interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> QuadResult {
    integrate_adaptive(&f, &[lo, hi], rel_tol, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(PANEL_ORDER);
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..(2 * PANEL_ORDER) {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let approx: f64 = nodes.iter().zip(&weights).map(|(z, w)| w * z.powi(k as i32)).sum();
            assert!((approx - exact).abs() < 1e-13, "k = {k}: {approx} vs {exact}");
        }
    }

    #[test]
    fn small_rules_match_tables() {
        let (nodes, weights) = gauss_legendre(2);
        assert!((nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((weights[0] - 1.0).abs() < 1e-15);
        let (nodes, weights) = gauss_legendre(3);
        assert_eq!(nodes[1], 0.0);
        assert!((weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = integrate(|t: f64| t.sqrt(), 0.0, 1.0, 1e-12);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn adaptive_handles_integrable_singularity() {
        // ∫_0^1 t^{-1/2} dt = 2
        let r = integrate(|t: f64| 1.0 / t.sqrt(), 0.0, 1.0, 1e-10);
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn kahan_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(kahan_sum(vals), 2.0);
    }
}
