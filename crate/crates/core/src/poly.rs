//! Dense polynomials in ascending-power coefficient form.

pub fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

/// Degree ignoring exact trailing zeros; the zero polynomial has degree 0.
pub fn degree(c: &[f64]) -> usize {
    c.iter().rposition(|&v| v != 0.0).unwrap_or(0)
}

pub fn trim(mut c: Vec<f64>) -> Vec<f64> {
    let len = degree(&c) + 1;
    c.truncate(len);
    if c.is_empty() {
        c.push(0.0);
    }
    c
}

pub fn is_zero(c: &[f64]) -> bool {
    c.iter().all(|&v| v == 0.0)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect()
}

/// Antiderivative with zero constant term.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(k, &ck)| ck / (k as f64 + 1.0)));
    out
}

pub fn mul(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len() + v.len() - 1];
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        for (j, &vj) in v.iter().enumerate() {
            out[i + j] += ui * vj;
        }
    }
    out
}

pub fn add(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len().max(v.len())];
    for (i, &ui) in u.iter().enumerate() {
        out[i] += ui;
    }
    for (i, &vi) in v.iter().enumerate() {
        out[i] += vi;
    }
    out
}

pub fn scale(c: &[f64], s: f64) -> Vec<f64> {
    c.iter().map(|&v| v * s).collect()
}

/// Coefficients of `(t − x)^k` in powers of `t`.
pub fn shifted_power(x: f64, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let mut binom = 1.0;
    for (j, c) in out.iter_mut().enumerate() {
        // (t − x)^k = Σ_j C(k, j) t^j (−x)^{k−j}
        *c = binom * (-x).powi((k - j) as i32);
        binom = binom * (k - j) as f64 / (j as f64 + 1.0);
    }
    out
}

/// Polynomial long division `num = q·den + rem`.
/// Coefficients of `u ↦ c(m + u)`.
pub fn taylor_shift(c: &[f64], m: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += m * out[j + 1];
        }
    }
    out
}

pub fn div_rem(num: &[f64], den: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let den = trim(den.to_vec());
    let dd = den.len() - 1;
    let lead = den[dd];
    assert!(lead != 0.0, "division by the zero polynomial");
    let mut rem = trim(num.to_vec());
    if rem.len() - 1 < dd {
        return (vec![0.0], rem);
    }
    let mut quot = vec![0.0; rem.len() - dd];
    for k in (0..quot.len()).rev() {
        let coef = rem[k + dd] / lead;
        quot[k] = coef;
        for (j, &dj) in den.iter().enumerate() {
            rem[k + j] -= coef * dj;
        }
        rem[k + dd] = 0.0;
    }
    rem.truncate(dd.max(1));
    (quot, rem)
}

/// Real roots of `c` inside `[lo, hi]`, sorted, found by recursive isolation
/// on the monotone segments between critical points followed by safeguarded
/// Newton refinement. Touching (even-multiplicity) roots are reported when
/// the polynomial value at the critical point is negligible.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(c.to_vec());
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        let r = -c[0] / c[1];
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let critical = roots_in(&derivative(&c), lo, hi);
    let mut knots = Vec::with_capacity(critical.len() + 2);
    knots.push(lo);
    knots.extend(critical.iter().copied().filter(|&t| t > lo && t < hi));
    knots.push(hi);

    let values: Vec<f64> = knots.iter().map(|&t| eval(&c, t)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let magnitude =
        c.iter().enumerate().fold(0.0f64, |m, (k, ck)| m + ck.abs() * lo.abs().max(hi.abs()).max(1.0).powi(k as i32));
    let negligible = 64.0 * f64::EPSILON * magnitude.max(scale);

    let mut roots = Vec::new();
    for (i, (&t, &v)) in knots.iter().zip(&values).enumerate() {
        if v.abs() <= negligible {
            roots.push(t);
        }
        if i + 1 < knots.len() {
            let (u, fu) = (t, v);
            let (w, fw) = (knots[i + 1], values[i + 1]);
            if fu.abs() > negligible && fw.abs() > negligible && fu.signum() != fw.signum() {
                roots.push(refine_root(&c, u, w, fu));
            }
        }
    }
    dedup_sorted(&mut roots, lo, hi);
    roots
}

fn refine_root(c: &[f64], mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let dc = derivative(c);
    let lo_negative = f_lo < 0.0;
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ft = eval(c, t);
        if ft == 0.0 {
            return t;
        }
        if (ft < 0.0) == lo_negative {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 2.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let d = eval(&dc, t);
        let newton = t - ft / d;
        let mid = 0.5 * (lo + hi);
        t = if d != 0.0 && newton > lo && newton < hi { newton } else { mid };
        if t == lo || t == hi {
            t = mid;
            if t == lo || t == hi {
                break;
            }
        }
    }
    t
}

fn dedup_sorted(roots: &mut Vec<f64>, lo: f64, hi: f64) {
    roots.sort_by(f64::total_cmp);
    let tol = 1e-13 * (hi - lo).abs().max(lo.abs()).max(hi.abs()).max(1.0);
    roots.dedup_by(|next, prev| (*next - *prev).abs() <= tol);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner() {
        assert_eq!(eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(eval(&[], 2.0), 0.0);
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let shifted = taylor_shift(&c, 0.7);
        for u in [-1.0, 0.0, 0.3, 2.0] {
            assert!((eval(&shifted, u) - eval(&c, 0.7 + u)).abs() < 1e-13);
        }
        assert_eq!(taylor_shift(&[1.0, 1.0], 2.0), vec![3.0, 1.0]);
    }

    #[test]
    fn shifted_power_expands_binomially() {
        // (t − 2)^3 = t^3 − 6t^2 + 12t − 8
        assert_eq!(shifted_power(2.0, 3), vec![-8.0, 12.0, -6.0, 1.0]);
        assert_eq!(shifted_power(0.5, 0), vec![1.0]);
    }

    #[test]
    fn division_by_linear_factor() {
        // (t^2 − 1) / (t + 1) = t − 1
        let (q, r) = div_rem(&[-1.0, 0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(q, vec![-1.0, 1.0]);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
        let (q, r) = div_rem(&[1.0, 0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(q, vec![-1.0, 1.0]);
        assert_eq!(r, vec![2.0]);
    }

    #[test]
    fn roots_of_factored_quadratic() {
        // (t − 1/4)(t − 3/4) = t^2 − t + 3/16
        let r = roots_in(&[3.0 / 16.0, -1.0, 1.0], 0.0, 1.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.25).abs() < 1e-15);
        assert!((r[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn double_root_is_reported_once() {
        // (t − 1/2)^2
        let r = roots_in(&[0.25, -1.0, 1.0], 0.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wilkinson_like_roots() {
        let mut c = vec![1.0];
        for k in 1..=8 {
            c = mul(&c, &[-(k as f64) / 9.0, 1.0]);
        }
        let r = roots_in(&c, 0.0, 1.0);
        assert_eq!(r.len(), 8, "{r:?}");
        for (k, root) in r.iter().enumerate() {
            assert!((root - (k as f64 + 1.0) / 9.0).abs() < 1e-10);
        }
    }

    #[test]
    fn endpoint_roots() {
        let r = roots_in(&[0.0, 1.0], 0.0, 1.0);
        assert_eq!(r, vec![0.0]);
        let r = roots_in(&[-1.0, 1.0], 0.0, 1.0);
        assert_eq!(r, vec![1.0]);
    }
}
