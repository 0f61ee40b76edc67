//! Central symmetry about the midpoint of the state space.
//!
//! A chain has a central symmetry with weights `x` when
//! `q_{N-k,N-n} = (x_n/x_k) q_{k,n}` for all `k, n`; equivalently the same
//! relation holds for `p_{k,n}(t)` at every `t`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::chain::{GeneratorMatrix, StateSpace};
use crate::error::{Error, Result};
use crate::transient::{deviation_matrix, reversed_chain, StationaryDistribution, TransitionMatrixSequence};

/// Rates below this are structural zeros.
pub const STRUCTURAL_ZERO: f64 = 1e-14;

/// Default tolerance on log-ratios during detection.
pub const DETECT_TOL: f64 = 1e-9;

/// Center and weights witnessing a central symmetry. Weights are indexed
/// by matrix position and normalized so the leftmost one is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCertificate {
    #[serde(serialize_with = "serialize_center")]
    pub center: f64,
    pub weights: Vec<f64>,
}

fn serialize_center<S: serde::Serializer>(c: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        s.serialize_i64(*c as i64)
    } else {
        s.serialize_f64(*c)
    }
}

impl SymmetryCertificate {
    pub fn new(space: &StateSpace, weights: Vec<f64>) -> Result<Self> {
        space.check_reflectable()?;
        if weights.len() != space.len() {
            return Err(Error::DimensionMismatch { rows: weights.len(), cols: 1, states: space.len() });
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("weight at state {} is not positive", space.label(i))));
        }
        let w0 = weights[0];
        Ok(SymmetryCertificate { center: space.center(), weights: weights.into_iter().map(|w| w / w0).collect() })
    }

    pub fn uniform(space: &StateSpace) -> Result<Self> {
        Self::new(space, vec![1.0; space.len()])
    }

    /// `x_n / x_k` by matrix index.
    pub fn ratio(&self, k: usize, n: usize) -> f64 {
        self.weights[n] / self.weights[k]
    }

    /// Largest relative violation of `x_n/x_k = x_{N-k}/x_{N-n}`.
    pub fn ratio_identity_residual(&self) -> f64 {
        let len = self.weights.len();
        let mut worst: f64 = 0.0;
        for k in 0..len {
            for n in 0..len {
                let lhs = self.ratio(k, n);
                let rhs = self.ratio(len - 1 - n, len - 1 - k);
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
            }
        }
        worst
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.weights.iter().all(|w| (w - 1.0).abs() <= tol)
    }
}

/// Outcome of a symmetry check, with the worst offending entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub pass: bool,
    pub max_residual: f64,
    /// Labels `(k, n)` of the worst residual.
    pub at: Option<(i64, i64)>,
    /// Grid time of the worst residual, for time-domain checks.
    pub time: Option<f64>,
}

/// Relative residual `|q_{N-k,N-n} − (x_n/x_k) q_{k,n}| / max(1, |q_{k,n}|)`
/// at matrix indices `(k, n)`.
pub fn generator_residual(q: &GeneratorMatrix, cert: &SymmetryCertificate, k: usize, n: usize) -> f64 {
    let len = q.dim();
    let r = q.rates();
    let qkn = r[(k, n)];
    (r[(len - 1 - k, len - 1 - n)] - cert.ratio(k, n) * qkn).abs() / qkn.abs().max(1.0)
}

fn check_dims(q: &GeneratorMatrix, cert: &SymmetryCertificate) -> Result<()> {
    q.space().check_reflectable()?;
    if cert.weights.len() != q.dim() {
        return Err(Error::DimensionMismatch { rows: cert.weights.len(), cols: 1, states: q.dim() });
    }
    Ok(())
}

pub fn verify_generator_symmetry(q: &GeneratorMatrix, cert: &SymmetryCertificate, tol: f64) -> Result<SymmetryCheck> {
    verify_generator_rows(q, cert, tol, |_| true)
}

/// Like [`verify_generator_symmetry`] but only rows `k` (and their mirror
/// images) with `include(k)` are checked.
pub fn verify_generator_rows(
    q: &GeneratorMatrix,
    cert: &SymmetryCertificate,
    tol: f64,
    include: impl Fn(usize) -> bool,
) -> Result<SymmetryCheck> {
    check_dims(q, cert)?;
    let len = q.dim();
    let mut worst = (0.0, None);
    for k in (0..len).filter(|&k| include(k) && include(len - 1 - k)) {
        for n in 0..len {
            let res = generator_residual(q, cert, k, n);
            if res > worst.0 || worst.1.is_none() {
                worst = (res, Some((k, n)));
            }
        }
    }
    let space = q.space();
    Ok(SymmetryCheck {
        pass: worst.0 <= tol,
        max_residual: worst.0,
        at: worst.1.map(|(k, n)| (space.label(k), space.label(n))),
        time: None,
    })
}

/// Result of detection; `unconstrained` lists labels that seeded their own
/// component of the ratio graph with weight 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub certificate: SymmetryCertificate,
    pub unconstrained: Vec<i64>,
}

/// Solve the ratio constraints in log space, BFS from the leftmost state.
pub fn detect_symmetry(q: &GeneratorMatrix, tol: f64) -> Result<Detection> {
    let space = *q.space();
    space.check_reflectable()?;
    let len = q.dim();
    let r = q.rates();
    let zero = |v: f64| v.abs() < STRUCTURAL_ZERO;
    let mirror = |i: usize| len - 1 - i;

    // edge (k -> n) carries log x_n − log x_k
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); len];
    for k in 0..len {
        for n in 0..len {
            let a = r[(k, n)];
            let b = r[(mirror(k), mirror(n))];
            if zero(a) != zero(b) {
                return Err(Error::StructuralZeroMismatch { k: space.label(k), n: space.label(n) });
            }
            if k != n && !zero(a) {
                let d = (b / a).ln();
                adj[k].push((n, d));
                adj[n].push((k, -d));
            }
        }
    }

    let mut log_x: Vec<Option<f64>> = vec![None; len];
    let mut unconstrained = Vec::new();
    for root in 0..len {
        if log_x[root].is_some() {
            continue;
        }
        if root != 0 {
            unconstrained.push(space.label(root));
        }
        log_x[root] = Some(0.0);
        let mut queue = VecDeque::from([root]);
        while let Some(k) = queue.pop_front() {
            let lk = log_x[k].unwrap_or(0.0);
            for &(n, d) in &adj[k] {
                if log_x[n].is_none() {
                    log_x[n] = Some(lk + d);
                    queue.push_back(n);
                }
            }
        }
    }
    let log_x: Vec<f64> = log_x.into_iter().map(|v| v.unwrap_or(0.0)).collect();

    for k in 0..len {
        for &(n, d) in &adj[k] {
            let residual = (log_x[n] - log_x[k] - d).abs();
            if residual > tol {
                return Err(Error::InconsistentRatios { k: space.label(k), n: space.label(n), residual });
            }
        }
        // mirrored diagonal entries must agree (ratio x_k/x_k = 1)
        let (a, b) = (r[(k, k)], r[(mirror(k), mirror(k))]);
        if (a - b).abs() > tol * a.abs().max(1.0) {
            return Err(Error::InconsistentRatios { k: space.label(k), n: space.label(k), residual: (a - b).abs() });
        }
    }

    let certificate = SymmetryCertificate::new(&space, log_x.iter().map(|l| l.exp()).collect())?;
    Ok(Detection { certificate, unconstrained })
}

/// Check `p_{N-k,N-n}(t) = (x_n/x_k) p_{k,n}(t)` at every grid point.
pub fn verify_probability_symmetry(
    p: &TransitionMatrixSequence,
    cert: &SymmetryCertificate,
    space: &StateSpace,
    tol: f64,
) -> Result<SymmetryCheck> {
    space.check_reflectable()?;
    let len = cert.weights.len();
    if p.dim() != len || len != space.len() {
        return Err(Error::GridMismatch);
    }
    let mut worst = (0.0, (0, 0), 0);
    for (i, m) in p.matrices.iter().enumerate() {
        for k in 0..len {
            for n in 0..len {
                let res = (m[(len - 1 - k, len - 1 - n)] - cert.ratio(k, n) * m[(k, n)]).abs();
                if res > worst.0 {
                    worst = (res, (k, n), i);
                }
            }
        }
    }
    let (k, n) = worst.1;
    Ok(SymmetryCheck {
        pass: worst.0 <= tol,
        max_residual: worst.0,
        at: Some((space.label(k), space.label(n))),
        time: Some(p.grid.point(worst.2)),
    })
}

/// Structural consequences of symmetry for an ergodic chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicSymmetryReport {
    /// (a) weights constant.
    pub weights_constant: bool,
    pub weights_residual: f64,
    /// (b) `π_{N-n} = π_n`.
    pub stationary_symmetric: bool,
    pub stationary_residual: f64,
    /// (c) the reversed chain is symmetric with constant weights.
    pub reversed_symmetric: bool,
    pub reversed_residual: f64,
    /// (d) `d_{N-k,N-n} = d_{k,n}`.
    pub deviation_symmetric: bool,
    pub deviation_residual: f64,
    /// (a) in the time domain: `p_{N-k,N-n}(t) = p_{k,n}(t)`.
    pub probabilities_symmetric: bool,
}

impl ErgodicSymmetryReport {
    pub fn all_pass(&self) -> bool {
        self.weights_constant
            && self.stationary_symmetric
            && self.reversed_symmetric
            && self.deviation_symmetric
            && self.probabilities_symmetric
    }
}

pub fn check_remark1(
    q: &GeneratorMatrix,
    p: &TransitionMatrixSequence,
    pi: &StationaryDistribution,
    cert: &SymmetryCertificate,
    tol: f64,
) -> Result<ErgodicSymmetryReport> {
    check_dims(q, cert)?;
    let len = q.dim();
    let weights_residual = cert.weights.iter().map(|w| (w - 1.0).abs()).fold(0.0, f64::max);
    let stationary_residual = (0..len).map(|n| (pi.probs[n] - pi.probs[len - 1 - n]).abs()).fold(0.0, f64::max);

    let rev = reversed_chain(q, pi)?;
    let reversed_residual =
        verify_generator_symmetry(&rev, &SymmetryCertificate::uniform(q.space())?, tol)?.max_residual;

    let d = deviation_matrix(q, pi)?;
    let mut deviation_residual: f64 = 0.0;
    for k in 0..len {
        for n in 0..len {
            deviation_residual = deviation_residual.max((d[(len - 1 - k, len - 1 - n)] - d[(k, n)]).abs());
        }
    }
    let probabilities = verify_probability_symmetry(p, &SymmetryCertificate::uniform(q.space())?, q.space(), tol)?;

    Ok(ErgodicSymmetryReport {
        weights_constant: weights_residual <= tol,
        weights_residual,
        stationary_symmetric: stationary_residual <= tol,
        stationary_residual,
        reversed_symmetric: reversed_residual <= tol,
        reversed_residual,
        deviation_symmetric: deviation_residual <= tol,
        deviation_residual,
        probabilities_symmetric: probabilities.pass,
    })
}
