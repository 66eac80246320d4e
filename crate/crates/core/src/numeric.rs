//! Small one-dimensional search routines.

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// false then true as `x` grows. Returns `hi` if `pred(hi)` is the first
/// true point the search can reach.
pub fn bisect_first_true(mut lo: f64, mut hi: f64, iters: usize, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// true then false as `x` grows. Assumes `pred(lo)` holds.
pub fn bisect_last_true(mut lo: f64, mut hi: f64, iters: usize, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(hi) {
        return hi;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Endpoints are evaluated too, so monotone functions are handled exactly.
pub fn golden_max(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    if b - a <= tol {
        return best;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `n` points spread over `[0, hi]`: half linear, half geometric toward zero.
pub fn mixed_grid(hi: f64, n: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(n + 2);
    pts.push(0.0);
    if hi <= 0.0 {
        return pts;
    }
    let half = n / 2;
    for k in 1..=half {
        pts.push(hi * k as f64 / half as f64);
    }
    let geo = n - half;
    for k in 0..geo {
        let e = -12.0 * (k as f64 + 1.0) / geo as f64;
        pts.push(hi * 10f64.powf(e));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}
