//! Exponentially scaled modified Bessel functions `e^{-x} I_n(x)` of
//! integer order.
//!
//! Uses Miller's backward recurrence `I_{m-1} = I_{m+1} + (2m/x) I_m`
//! started far above the wanted order, normalized with
//! `e^{-x} (I_0 + 2 Σ_{m≥1} I_m) = 1`. The backward direction is stable
//! because `I_m` is the recessive solution as `m` grows.

/// Below this argument the power series is used instead.
const SERIES_LIMIT: f64 = 1.0;

/// Rescaling threshold inside the recurrence.
const BIG: f64 = 1e250;

/// Starting order for the backward recurrence, well past where
/// `e^{-x} I_m(x)` is below double precision relative to the result.
fn start_order(order: usize, x: f64) -> usize {
    let spread = (90.0 * x).sqrt().ceil() as usize;
    (order + 32 + spread + x.min(40.0) as usize).max((x / 2.0) as usize + spread)
}

/// `e^{-x} I_n(x)` for integer `n` and `x ≥ 0`.
pub fn bessel_i_scaled(n: i64, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        return series(order, x);
    }
    let mut out = [0.0];
    miller(x, order, order, &mut out);
    out[0]
}

/// `e^{-x} I_m(x)` for `m = 0..=max_order`.
pub fn bessel_i_scaled_seq(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_LIMIT {
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = series(m, x);
            if *slot == 0.0 {
                break;
            }
        }
        return out;
    }
    miller(x, 0, max_order, &mut out);
    out
}

/// Backward recurrence filling `out[m - lo]` for `m` in `lo..=hi`.
fn miller(x: f64, lo: usize, hi: usize, out: &mut [f64]) {
    let start = start_order(hi, x);
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // f_{m+1}
    let mut cur = 1.0; // f_m
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        if m >= lo && m <= hi {
            out[m - lo] = cur;
        }
        norm += 2.0 * cur;
        let below = above + (m as f64) * two_over_x * cur;
        above = cur;
        cur = below;
        if cur > BIG {
            let scale = 1.0 / BIG;
            cur *= scale;
            above *= scale;
            norm *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    if lo == 0 {
        out[0] = cur;
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// `e^{-x} Σ_k (x/2)^{2k+n} / (k! (k+n)!)`, for small `x`.
fn series(order: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_first = order as f64 * half.ln() - ln_factorial(order) - x;
    let mut term = log_first.exp();
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
