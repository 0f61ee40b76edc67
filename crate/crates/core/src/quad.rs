//! Quadrature helpers.

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol`. The interval is pre-split into 16 panels so integrands that are
/// flat near one end do not terminate the recursion early.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    const PANELS: usize = 16;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == PANELS { b } else { lo + width };
        let (flo, fhi) = (f(lo), f(hi));
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += refine(&f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, 48);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Trapezoid approximation of `∫_0^{t_m} a(θ) b(t_m − θ) dθ` on a uniform
/// grid with spacing `h`, for every `m` (the `m = 0` value is 0).
pub fn convolve(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let len = a.len().min(b.len());
    let mut out = vec![0.0; len];
    for (m, slot) in out.iter_mut().enumerate().skip(1) {
        let mut acc = 0.5 * (a[0] * b[m] + a[m] * b[0]);
        for j in 1..m {
            acc += a[j] * b[m - j];
        }
        *slot = h * acc;
    }
    out
}
