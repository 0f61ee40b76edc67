//! Closed forms for the bilateral birth-death process on the integers with
//! birth rate `λ`, death rate `μ` and jumps to 0 at rate `α` from every
//! nonzero state.
//!
//! Everything routes through scaled Bessel values `e^{-x} I_n(x)`; the
//! remaining exponential factors are recombined analytically so that
//! nothing overflows for large `t`.

pub mod bessel;

pub use bessel::{bessel_i_scaled, bessel_i_scaled_seq};

use serde::{Deserialize, Serialize};

use crate::chain::TimeGrid;
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::table::Table;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Jump rates used by [`figure1_traces`]: first-passage panel, avoiding panel.
pub const FIGURE1_FPT_ALPHAS: [f64; 3] = [0.1, 0.2, 0.3];
pub const FIGURE1_AVOIDING_ALPHAS: [f64; 4] = [0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdJumpModel {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl BdJumpModel {
    /// `λ, μ > 0`; `α = 0` is admitted as the pure birth-death case.
    pub fn new(lambda: f64, mu: f64, alpha: f64) -> Result<Self> {
        let finite = lambda.is_finite() && mu.is_finite() && alpha.is_finite();
        if !finite || lambda <= 0.0 || mu <= 0.0 || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need lambda > 0, mu > 0, alpha >= 0 (got {lambda}, {mu}, {alpha})"
            )));
        }
        Ok(BdJumpModel { lambda, mu, alpha })
    }

    /// Bessel argument rate `2√(λμ)`.
    pub fn gamma(&self) -> f64 {
        2.0 * (self.lambda * self.mu).sqrt()
    }

    fn sqrt_ratio(&self) -> f64 {
        (self.lambda / self.mu).sqrt()
    }

    fn require_balanced(&self) -> Result<()> {
        if self.lambda != self.mu {
            return Err(Error::AsymmetricRates { lambda: self.lambda, mu: self.mu });
        }
        Ok(())
    }

    /// States to sum over when checking normalization at time `t` from `k`.
    pub fn summation_radius(&self, k: i64, t: f64) -> i64 {
        let spread = 20.0 * (self.lambda * self.mu * t).sqrt();
        60.max(k.abs() + spread.ceil() as i64)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// `(λ/μ)^{m/2} e^{-(λ+μ+extra)τ} I_m(γτ)`, in scaled form.
fn weighted_bessel(model: &BdJumpModel, m: i64, tau: f64, extra: f64) -> f64 {
    let g = model.gamma();
    let decay = (-(model.lambda + model.mu + extra - g) * tau).exp();
    model.sqrt_ratio().powi(m as i32) * bessel_i_scaled(m, g * tau) * decay
}

/// Transition probability of the process without jumps (`α = 0`):
/// `(λ/μ)^{(n−k)/2} I_{n−k}(2√(λμ)t) e^{−(λ+μ)t}`.
pub fn hat_transition_probability(model: &BdJumpModel, k: i64, n: i64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(weighted_bessel(model, n - k, t, 0.0))
}

/// `p_{k,n}(t)`: free Bessel term plus the jump-to-0 renewal integral,
/// the latter by adaptive Simpson to absolute tolerance `quad_tol`.
pub fn transition_probability(model: &BdJumpModel, k: i64, n: i64, t: f64, quad_tol: f64) -> Result<f64> {
    check_time(t)?;
    let a = model.alpha;
    let free = weighted_bessel(model, n - k, t, a);
    if a == 0.0 || t == 0.0 {
        return Ok(free);
    }
    let integral = adaptive_simpson(|tau| weighted_bessel(model, n, tau, a), 0.0, t, quad_tol / a);
    Ok(free + a * integral)
}

/// The same probability through the pure birth-death law:
/// `e^{−αt} p̂_{k,n}(t) + α ∫_0^t e^{−ατ} p̂_{0,n}(τ) dτ`.
pub fn transition_probability_decomposed(model: &BdJumpModel, k: i64, n: i64, t: f64, quad_tol: f64) -> Result<f64> {
    check_time(t)?;
    let a = model.alpha;
    let head = (-a * t).exp() * hat_transition_probability(model, k, n, t)?;
    if a == 0.0 || t == 0.0 {
        return Ok(head);
    }
    let tail = adaptive_simpson(|tau| (-a * tau).exp() * weighted_bessel(model, n, tau, 0.0), 0.0, t, quad_tol / a);
    Ok(head + a * tail)
}

/// Roots `z_1 < 1 < z_2` of `λz² − (λ+μ+α)z + μ = 0`.
pub fn pgf_roots(model: &BdJumpModel) -> (f64, f64) {
    let b = model.lambda + model.mu + model.alpha;
    let disc = (b * b - 4.0 * model.lambda * model.mu).sqrt();
    let z2 = (b + disc) / (2.0 * model.lambda);
    // Vieta, avoiding the cancellation in b − disc
    let z1 = model.mu / (model.lambda * z2);
    (z1, z2)
}

/// Stationary probability `π_n`; requires `α > 0`.
pub fn stationary_law(model: &BdJumpModel, n: i64) -> Result<f64> {
    if model.alpha == 0.0 {
        return Err(Error::AlphaZero);
    }
    let (z1, z2) = pgf_roots(model);
    let scale = model.alpha / (model.lambda * (z2 - z1));
    let z = if n < 0 { z1 } else { z2 };
    Ok(scale * z.powi(-n as i32))
}

/// Downward first-passage density from `k ≥ 1` to 0 when `λ = μ`:
///
/// ```text
/// g(t) = e^{−(2λ+α)t} { λ[I_{k−1} − I_{k+1}] + α Σ_{j≥1} [I_{k−j} − I_{k+j}] }(2λt)
/// ```
///
/// The series stops once both Bessel terms drop below
/// `series_tol / (2α·max(t, 1))`.
pub fn fpt_density_closed_form(model: &BdJumpModel, k: i64, t: f64, series_tol: f64) -> Result<f64> {
    model.require_balanced()?;
    if k < 1 {
        return Err(Error::InvalidParameter(format!("start state must be >= 1 (got {k})")));
    }
    check_time(t)?;
    let x = 2.0 * model.lambda * t;
    let k = k as usize;
    let max_order = 2 * k + 40 + (200.0 * x).sqrt().ceil() as usize;
    let bes = bessel_i_scaled_seq(max_order, x);
    let at = |m: i64| bes.get(m.unsigned_abs() as usize).copied().unwrap_or(0.0);

    let mut total = model.lambda * (at(k as i64 - 1) - at(k as i64 + 1));
    if model.alpha > 0.0 {
        let threshold = series_tol / (2.0 * model.alpha * t.max(1.0));
        let mut series = 0.0;
        for j in 1..=(max_order - k) as i64 {
            let (lo, hi) = (at(k as i64 - j), at(k as i64 + j));
            series += lo - hi;
            if j > k as i64 && lo < threshold && hi < threshold {
                break;
            }
        }
        total += model.alpha * series;
    }
    Ok((-model.alpha * t).exp() * total)
}

/// 0-avoiding transition probability for `λ = μ`, `k` and `n` nonzero on
/// the same side: `e^{−(2λ+α)t} [I_{n−k} − I_{n+k}](2λt)`.
pub fn avoiding_closed_form(model: &BdJumpModel, k: i64, n: i64, t: f64) -> Result<f64> {
    model.require_balanced()?;
    if k == 0 || n == 0 {
        return Err(Error::CenterState(0));
    }
    if (k < 0) != (n < 0) {
        return Err(Error::OppositeSides { k, n });
    }
    check_time(t)?;
    let x = 2.0 * model.lambda * t;
    Ok((-model.alpha * t).exp() * (bessel_i_scaled(n - k, x) - bessel_i_scaled(n + k, x)))
}

/// First-passage and avoiding traces for several jump rates on one grid.
#[derive(Debug, Clone)]
pub struct Figure1Traces {
    pub grid: TimeGrid,
    pub fpt_alphas: Vec<f64>,
    /// One `g⁻_{k,0}` column per entry of `fpt_alphas`.
    pub fpt: Vec<Vec<f64>>,
    pub avoiding_alphas: Vec<f64>,
    /// One `p^{⟨0⟩}_{k,n}` column per entry of `avoiding_alphas`.
    pub avoiding: Vec<Vec<f64>>,
}

impl Figure1Traces {
    pub fn fpt_table(&self) -> Table {
        let mut t = Table::with_time(&self.grid);
        for (a, col) in self.fpt_alphas.iter().zip(&self.fpt) {
            t.push(format!("g_alpha_{a:?}"), col.clone());
        }
        t
    }

    pub fn avoiding_table(&self) -> Table {
        let mut t = Table::with_time(&self.grid);
        for (a, col) in self.avoiding_alphas.iter().zip(&self.avoiding) {
            t.push(format!("pav_alpha_{a:?}"), col.clone());
        }
        t
    }
}

/// Evaluate the first-passage densities from `k` (for each `fpt_alphas`)
/// and the avoiding probabilities `k → n` (for each `avoiding_alphas`).
pub fn figure1_traces(
    lambda: f64,
    k: i64,
    n: i64,
    grid: TimeGrid,
    fpt_alphas: &[f64],
    avoiding_alphas: &[f64],
    series_tol: f64,
) -> Result<Figure1Traces> {
    let column = |alpha: f64, f: &dyn Fn(&BdJumpModel, f64) -> Result<f64>| -> Result<Vec<f64>> {
        let model = BdJumpModel::new(lambda, lambda, alpha)?;
        grid.points().map(|t| f(&model, t)).collect()
    };
    let fpt = fpt_alphas
        .iter()
        .map(|&a| column(a, &|m, t| fpt_density_closed_form(m, k, t, series_tol)))
        .collect::<Result<_>>()?;
    let avoiding =
        avoiding_alphas.iter().map(|&a| column(a, &|m, t| avoiding_closed_form(m, k, n, t))).collect::<Result<_>>()?;
    Ok(Figure1Traces {
        grid,
        fpt_alphas: fpt_alphas.to_vec(),
        fpt,
        avoiding_alphas: avoiding_alphas.to_vec(),
        avoiding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(lambda: f64, mu: f64, alpha: f64) -> BdJumpModel {
        BdJumpModel::new(lambda, mu, alpha).unwrap()
    }

    #[test]
    fn parameters_validated() {
        assert!(BdJumpModel::new(0.0, 1.0, 0.1).is_err());
        assert!(BdJumpModel::new(1.0, 1.0, -0.1).is_err());
        assert!(BdJumpModel::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn delta_at_time_zero() {
        let m = model(1.3, 0.7, 0.4);
        for k in -3..=3 {
            for n in -3..=3 {
                let want = if k == n { 1.0 } else { 0.0 };
                assert_eq!(transition_probability(&m, k, n, 0.0, 1e-10).unwrap(), want);
                assert_eq!(hat_transition_probability(&m, k, n, 0.0).unwrap(), want);
            }
        }
        assert_eq!(transition_probability(&m, 0, 0, -1.0, 1e-10).unwrap_err(), Error::NegativeTime(-1.0));
    }

    #[test]
    fn hat_value_and_alpha_zero() {
        let m = model(1.0, 1.0, 0.0);
        let v = hat_transition_probability(&m, 0, 0, 1.0).unwrap();
        assert!((v - 0.308_508_322_553_671).abs() < 1e-14);
        for n in -4..=4 {
            let a = transition_probability(&m, 1, n, 2.5, 1e-10).unwrap();
            let b = hat_transition_probability(&m, 1, n, 2.5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn normalization() {
        let m = model(1.0, 1.0, 0.5);
        let radius = m.summation_radius(0, 5.0);
        let total: f64 = (-radius..=radius).map(|n| transition_probability(&m, 0, n, 5.0, 1e-12).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn decomposition_agrees() {
        let m = model(1.2, 0.8, 0.5);
        for (k, n, t) in [(0, 0, 1.0), (2, -1, 3.0), (-3, 4, 0.7)] {
            let a = transition_probability(&m, k, n, t, 1e-10).unwrap();
            let b = transition_probability_decomposed(&m, k, n, t, 1e-10).unwrap();
            assert!((a - b).abs() < 2e-10);
        }
    }

    #[test]
    fn stationary_law_exact_case() {
        let m = model(1.0, 1.0, 0.5);
        assert_eq!(pgf_roots(&m), (0.5, 2.0));
        assert_eq!(stationary_law(&m, 0).unwrap(), 1.0 / 3.0);
        for n in 1..=10i64 {
            let want = (1.0 / 3.0) * 0.5f64.powi(n as i32);
            assert_eq!(stationary_law(&m, n).unwrap(), want);
            assert_eq!(stationary_law(&m, -n).unwrap(), want);
        }
        let total: f64 = (-200..=200).map(|n| stationary_law(&m, n).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(stationary_law(&model(1.0, 1.0, 0.0), 0).unwrap_err(), Error::AlphaZero);
    }

    #[test]
    fn stationary_symmetric_when_balanced() {
        let m = model(2.5, 2.5, 0.7);
        for n in 1..30 {
            let (a, b) = (stationary_law(&m, n).unwrap(), stationary_law(&m, -n).unwrap());
            assert!((a - b).abs() <= 1e-13 * a, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn fpt_pure_bd_k1_reduces_to_i1() {
        let m = model(1.0, 1.0, 0.0);
        for &t in &[0.1, 0.5, 1.0, 3.0, 10.0] {
            let g = fpt_density_closed_form(&m, 1, t, 1e-12).unwrap();
            let want = bessel_i_scaled(1, 2.0 * t) / t;
            assert!((g - want).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn fpt_requires_balanced_rates() {
        let m = model(1.0, 2.0, 0.1);
        assert!(matches!(fpt_density_closed_form(&m, 3, 1.0, 1e-12), Err(Error::AsymmetricRates { .. })));
        assert!(matches!(avoiding_closed_form(&m, 3, 1, 1.0), Err(Error::AsymmetricRates { .. })));
    }

    #[test]
    fn fpt_total_mass() {
        let m = model(1.0, 1.0, 0.1);
        let mass = adaptive_simpson(|t| fpt_density_closed_form(&m, 3, t, 1e-12).unwrap(), 0.0, 200.0, 1e-8);
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    #[test]
    fn avoiding_basics() {
        let m = model(1.0, 1.0, 0.3);
        assert_eq!(avoiding_closed_form(&m, 2, 2, 0.0).unwrap(), 1.0);
        assert_eq!(avoiding_closed_form(&m, 3, 1, 0.0).unwrap(), 0.0);
        assert_eq!(avoiding_closed_form(&m, 3, -1, 1.0).unwrap_err(), Error::OppositeSides { k: 3, n: -1 });
        assert_eq!(avoiding_closed_form(&m, 0, 1, 1.0).unwrap_err(), Error::CenterState(0));
        let hat = model(1.0, 1.0, 0.0);
        for (k, n) in [(1, 4), (3, 1), (-2, -5)] {
            for &t in &[0.3, 1.0, 4.0] {
                let a = avoiding_closed_form(&m, k, n, t).unwrap();
                assert!((a - avoiding_closed_form(&m, n, k, t).unwrap()).abs() < 1e-16);
                let b = (-0.3 * t).exp() * avoiding_closed_form(&hat, k, n, t).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
