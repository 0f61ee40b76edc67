//! Strong similarity `p̃_{k,n}(t) = (β_n/β_k) p_{k,n}(t)`.
//!
//! At the generator level this is `q̃_{k,n} = (β_n/β_k) q_{k,n}`. The rows
//! of `Q̃` sum to `(Qβ)_k / β_k`, so `β` has to be harmonic (`Qβ = 0`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bdjump::BdJumpModel;
use crate::chain::{close_rows, truncate_bdjump, validate_generator, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::symmetry::{verify_generator_rows, verify_generator_symmetry, SymmetryCertificate};

/// Largest accepted relative harmonic residual `|(Qβ)_k| / β_k`.
pub const HARMONIC_TOL: f64 = 1e-10;

/// Tolerance of the symmetry check on a transformed chain.
pub const SIMILARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub beta: Vec<f64>,
}

impl SimilarityWeights {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some(i) = beta.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("beta[{i}] = {} is not positive", beta[i])));
        }
        Ok(SimilarityWeights { beta })
    }

    pub fn inverse(&self) -> Self {
        SimilarityWeights { beta: self.beta.iter().map(|b| 1.0 / b).collect() }
    }
}

/// Relative residual `|(Qβ)_k| / β_k` of each row.
pub fn harmonic_residuals(q: &GeneratorMatrix, beta: &SimilarityWeights) -> Vec<f64> {
    let r = q.rates();
    (0..q.dim())
        .map(|k| {
            let s: f64 = (0..q.dim()).map(|n| r[(k, n)] * beta.beta[n]).sum();
            s.abs() / beta.beta[k]
        })
        .collect()
}

fn check_len(q: &GeneratorMatrix, beta: &SimilarityWeights) -> Result<()> {
    if beta.beta.len() != q.dim() {
        return Err(Error::DimensionMismatch { rows: beta.beta.len(), cols: 1, states: q.dim() });
    }
    Ok(())
}

fn transform(q: &GeneratorMatrix, beta: &SimilarityWeights) -> DMatrix<f64> {
    let b = &beta.beta;
    let r = q.rates();
    DMatrix::from_fn(q.dim(), q.dim(), |k, n| if k == n { r[(k, k)] } else { b[n] / b[k] * r[(k, n)] })
}

/// `Q̃` with `q̃_{k,n} = (β_n/β_k) q_{k,n}`; the diagonal is kept as is.
pub fn apply_similarity(q: &GeneratorMatrix, beta: &SimilarityWeights) -> Result<GeneratorMatrix> {
    check_len(q, beta)?;
    for (k, res) in harmonic_residuals(q, beta).into_iter().enumerate() {
        if res > HARMONIC_TOL {
            return Err(Error::NonHarmonic { k: q.space().label(k), residual: res });
        }
    }
    validate_generator(transform(q, beta), *q.space())
}

/// Like [`apply_similarity`], but rows in `exempt` skip the harmonic check
/// and have their diagonal re-closed after the transform.
pub fn apply_similarity_exempt(
    q: &GeneratorMatrix,
    beta: &SimilarityWeights,
    exempt: &[usize],
) -> Result<GeneratorMatrix> {
    check_len(q, beta)?;
    for (k, res) in harmonic_residuals(q, beta).into_iter().enumerate() {
        if !exempt.contains(&k) && res > HARMONIC_TOL {
            return Err(Error::NonHarmonic { k: q.space().label(k), residual: res });
        }
    }
    let mut m = transform(q, beta);
    let closed = {
        let mut c = m.clone();
        close_rows(&mut c);
        c
    };
    for &k in exempt {
        m[(k, k)] = closed[(k, k)];
    }
    validate_generator(m, *q.space())
}

/// Weights `x̃_n = (β_{N−n}/β_n) x_n` carried over to the similar chain.
pub fn transformed_weights(cert: &SymmetryCertificate, beta: &SimilarityWeights) -> Vec<f64> {
    let len = beta.beta.len();
    (0..len).map(|n| beta.beta[len - 1 - n] / beta.beta[n] * cert.weights[n]).collect()
}

/// Transform a symmetric chain and verify the carried-over certificate.
pub fn verify_theorem5(
    q: &GeneratorMatrix,
    cert: &SymmetryCertificate,
    beta: &SimilarityWeights,
) -> Result<(GeneratorMatrix, SymmetryCertificate)> {
    let qt = apply_similarity(q, beta)?;
    let xt = SymmetryCertificate::new(q.space(), transformed_weights(cert, beta))?;
    let check = verify_generator_symmetry(&qt, &xt, SIMILARITY_TOL)?;
    if !check.pass {
        let (k, n) = check.at.unwrap_or((0, 0));
        return Err(Error::SymmetryViolation { k, n, residual: check.max_residual });
    }
    Ok((qt, xt))
}

/// Harmonic vector with prescribed values at `boundary` (matrix index,
/// value): solves `Q_II β_I = −Q_IB β_B` on the remaining states.
pub fn harmonic_extension(q: &GeneratorMatrix, boundary: &[(usize, f64)]) -> Result<SimilarityWeights> {
    let n = q.dim();
    let r = q.rates();
    let mut beta = vec![0.0; n];
    let mut fixed = vec![false; n];
    for &(i, v) in boundary {
        beta[i] = v;
        fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if !free.is_empty() {
        let a = DMatrix::from_fn(free.len(), free.len(), |i, j| r[(free[i], free[j])]);
        let b = DVector::from_fn(free.len(), |i, _| -boundary.iter().map(|&(j, v)| r[(free[i], j)] * v).sum::<f64>());
        let x = a.lu().solve(&b).ok_or(Error::Singular)?;
        for (slot, &i) in free.iter().enumerate() {
            beta[i] = x[slot];
        }
    }
    SimilarityWeights::new(beta)
}

/// The family of bilateral birth-death chains similar to the constant-rate
/// one, realized on `[-m, m]`.
#[derive(Debug, Clone)]
pub struct Example2Family {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub base: GeneratorMatrix,
    pub beta: SimilarityWeights,
    pub transformed: GeneratorMatrix,
    /// Edge rows exempted from the harmonic check (labels).
    pub boundary_rows: Vec<i64>,
    /// Largest harmonic residual over interior rows.
    pub interior_residual: f64,
}

impl Example2Family {
    /// `β_n = 1 + η (μ/λ)^n`, the positive solutions of
    /// `λβ_{n+1} + μβ_{n−1} = (λ+μ)β_n`.
    pub fn beta_at(&self, n: i64) -> f64 {
        example2_beta(self.lambda, self.mu, self.eta, n)
    }

    /// `λ̃_n = (β_{n+1}/β_n) λ`
    pub fn birth_rate(&self, n: i64) -> f64 {
        self.beta_at(n + 1) / self.beta_at(n) * self.lambda
    }

    /// `μ̃_n = (β_{n−1}/β_n) μ`
    pub fn death_rate(&self, n: i64) -> f64 {
        self.beta_at(n - 1) / self.beta_at(n) * self.mu
    }

    /// Weights `x_n = (λ/μ)^{−n}` of the untransformed chain.
    pub fn base_weights(&self) -> Vec<f64> {
        self.base.space().labels().map(|n| (self.mu / self.lambda).powi(n as i32)).collect()
    }

    /// `x̃_n = (β_{−n}/β_n) x_n`.
    pub fn transformed_weights(&self) -> Vec<f64> {
        self.base
            .space()
            .labels()
            .map(|n| self.beta_at(-n) / self.beta_at(n) * (self.mu / self.lambda).powi(n as i32))
            .collect()
    }

    /// Symmetry residual of the transformed chain away from the edges.
    pub fn interior_symmetry(&self) -> Result<f64> {
        let cert = SymmetryCertificate::new(self.transformed.space(), self.transformed_weights())?;
        let last = self.transformed.dim() - 1;
        Ok(verify_generator_rows(&self.transformed, &cert, SIMILARITY_TOL, |k| k != 0 && k != last)?.max_residual)
    }
}

pub fn example2_beta(lambda: f64, mu: f64, eta: f64, n: i64) -> f64 {
    1.0 + eta * (mu / lambda).powi(n as i32)
}

pub fn example2_family(lambda: f64, mu: f64, eta: f64, m: i64) -> Result<Example2Family> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::InvalidParameter(format!("eta must be >= 0 (got {eta})")));
    }
    let base = truncate_bdjump(&BdJumpModel::new(lambda, mu, 0.0)?, -m, m)?;
    let beta = SimilarityWeights::new(base.space().labels().map(|n| example2_beta(lambda, mu, eta, n)).collect())?;
    let last = base.dim() - 1;
    let exempt = [0, last];
    let transformed = apply_similarity_exempt(&base, &beta, &exempt)?;
    let interior_residual = harmonic_residuals(&base, &beta)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| !exempt.contains(k))
        .map(|(_, r)| r)
        .fold(0.0, f64::max);
    Ok(Example2Family { lambda, mu, eta, boundary_rows: vec![-m, m], base, beta, transformed, interior_residual })
}
