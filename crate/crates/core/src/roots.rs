//! Scalar bracketing helpers shared by the ergosphere, tangency and event code.

/// Shrinks a sign-change bracket `[lo, hi]` of `f` until its width is at most `tol`.
///
/// Returns `None` when `f(lo)` and `f(hi)` have the same strict sign. An exact
/// zero at either end collapses the bracket onto that end.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Option<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some((a, a));
    }
    if fb == 0.0 {
        return Some((b, b));
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some((m, m));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some((a, b))
}

/// A few secant steps inside a tight bracket; falls back to the bracket
/// midpoint whenever a step would leave it.
pub fn secant_polish<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return a;
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f(x0), f(x1));
    let mut best = if f0.abs() < f1.abs() { x0 } else { x1 };
    let mut best_f = f0.abs().min(f1.abs());
    for _ in 0..4 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(lo..=hi).contains(&x2) {
            let mid = 0.5 * (lo + hi);
            return if f(mid).abs() < best_f { mid } else { best };
        }
        let f2 = f(x2);
        if f2.abs() < best_f {
            best = x2;
            best_f = f2.abs();
        }
        if f2 == 0.0 {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let (a, b) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-13 && (b - a).abs() <= 1e-14);
        let x = secant_polish(|x| x * x - 2.0, a, b);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn bisect_exact_zero_endpoint() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-9), Some((0.0, 0.0)));
    }
}
