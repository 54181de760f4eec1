//! Real roots of low-degree polynomials on a closed interval.
//!
//! Coefficients are in ascending order (`c[0] + c[1] x + ...`). Roots of the
//! derivative split the interval into monotone pieces, and each piece that
//! brackets a sign change is bisected to machine precision, so no closed-form
//! cubic formula (and its cancellation problems) is needed.

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Real roots of the polynomial inside `[lo, hi]`, sorted ascending.
///
/// Returns `None` when a coefficient is non-finite.
pub(crate) fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Option<Vec<f64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut degree = coeffs.len();
    while degree > 0 && coeffs[degree - 1] == 0.0 {
        degree -= 1;
    }
    let c = &coeffs[..degree];
    let mut roots = match degree {
        0 | 1 => Vec::new(),
        2 => vec![-c[0] / c[1]],
        3 => quadratic_roots(c[0], c[1], c[2]),
        _ => bracketed_roots(c, lo, hi)?,
    };
    roots.retain(|r| r.is_finite() && *r >= lo && *r <= hi);
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    Some(roots)
}

/// Roots of `c0 + c1 x + c2 x^2` via the cancellation-free form.
fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    if q == 0.0 {
        // c1 == 0 and c0 == 0: double root at the origin.
        return vec![0.0];
    }
    vec![q / c2, c0 / q]
}

fn bracketed_roots(c: &[f64], lo: f64, hi: f64) -> Option<Vec<f64>> {
    let critical = real_roots_in(&derivative(c), lo, hi)?;
    let mut knots = Vec::with_capacity(critical.len() + 2);
    knots.push(lo);
    knots.extend(critical.into_iter().filter(|&x| x > lo && x < hi));
    knots.push(hi);

    let mut roots = Vec::new();
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (horner(c, a), horner(c, b));
        if fa == 0.0 {
            roots.push(a);
        } else if fb == 0.0 {
            roots.push(b);
        } else if fa.signum() != fb.signum() {
            roots.push(bisect(c, a, b, fa));
        }
    }
    Some(roots)
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = horner(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
