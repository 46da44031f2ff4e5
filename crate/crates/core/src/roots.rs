//! Bracketing root finders.

/// Bisection on a sign-changing bracket `[lo, hi]` until the bracket width is
/// below `rel_tol · max(|lo|, |hi|)` (or `abs_tol`, whichever is larger).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, abs_tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= (rel_tol * lo.abs().max(hi.abs())).max(abs_tol) || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// All roots of `f` on `[lo, hi]` found by sign changes on a uniform grid of
/// `intervals` cells, each refined by bisection. Exact zeros on grid nodes are
/// reported as-is. Roots are returned in increasing order.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize, rel_tol: f64, abs_tol: f64) -> Vec<f64> {
    assert!(intervals > 0 && hi > lo);
    let step = (hi - lo) / intervals as f64;
    let node = |i: usize| if i == intervals { hi } else { lo + step * i as f64 };
    let values: Vec<f64> = (0..=intervals).map(|i| f(node(i))).collect();
    let mut roots = Vec::new();
    for i in 0..intervals {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(node(i));
        } else if b != 0.0 && a.signum() != b.signum() && a.is_finite() && b.is_finite() {
            if let Some(r) = bisect(&f, node(i), node(i + 1), rel_tol, abs_tol) {
                roots.push(r);
            }
        }
    }
    if values[intervals] == 0.0 {
        roots.push(hi);
    }
    roots
}
