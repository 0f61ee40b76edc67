//! Transient and long-run behaviour of finite generators.
//!
//! `P(t) = e^{Qt}` is evaluated by uniformization: with `Λ ≥ max|q_nn|`
//! and `M = I + Q/Λ`,
//!
//! ```text
//! P(t) = Σ_m Poisson(m; Λt) · M^m
//! ```
//!
//! Every `M^m` is row-stochastic, so cutting the series where the Poisson
//! tail drops below `tol` bounds the entrywise error by `tol`.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::chain::{close_rows, validate_generator, GeneratorMatrix, TimeGrid};
use crate::error::{Error, Result};

/// Headroom factor on the uniformization rate.
pub const UNIFORMIZATION_HEADROOM: f64 = 1.05;

/// Cap on cached matrix entries (`powers × n²`) before falling back to
/// step-wise propagation.
const POWER_CACHE_LIMIT: usize = 24_000_000;

/// One transition matrix per grid point.
#[derive(Debug, Clone)]
pub struct TransitionMatrixSequence {
    pub grid: TimeGrid,
    pub matrices: Vec<DMatrix<f64>>,
}

impl TransitionMatrixSequence {
    pub fn at(&self, i: usize) -> &DMatrix<f64> {
        &self.matrices[i]
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    /// `p_{k,n}(t)` along the grid, by matrix index.
    pub fn entry_trace(&self, k: usize, n: usize) -> Vec<f64> {
        self.matrices.iter().map(|m| m[(k, n)]).collect()
    }
}

/// Poisson weights `Poisson(m; a)` for `m = 0..=K`, with `K` the first index
/// where the remaining tail mass is below `tol`.
pub(crate) fn poisson_weights(a: f64, tol: f64) -> Vec<f64> {
    if a == 0.0 {
        return vec![1.0];
    }
    let ln_a = a.ln();
    let mut weights = Vec::new();
    let mut log_w = -a;
    let mut cum = 0.0;
    let mut m = 0usize;
    loop {
        let w = log_w.exp();
        weights.push(w);
        cum += w;
        // Past the mode the tail is bounded by the remaining mass.
        if m as f64 > a && 1.0 - cum < tol {
            break;
        }
        m += 1;
        log_w += ln_a - (m as f64).ln();
        if m > 10 * (a as usize + 100) {
            break;
        }
    }
    weights
}

struct Uniformized {
    rate: f64,
    step: DMatrix<f64>,
}

fn uniformize(q: &GeneratorMatrix) -> Uniformized {
    let n = q.dim();
    let rate = UNIFORMIZATION_HEADROOM * q.max_exit_rate();
    let step = if rate > 0.0 { DMatrix::identity(n, n) + q.rates() / rate } else { DMatrix::identity(n, n) };
    Uniformized { rate, step }
}

fn mix(powers: &[DMatrix<f64>], weights: &[f64]) -> DMatrix<f64> {
    let n = powers[0].nrows();
    let mut out = DMatrix::zeros(n, n);
    for (p, &w) in powers.iter().zip(weights) {
        if w > 0.0 {
            out += p * w;
        }
    }
    out
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::BadTolerance(tol));
    }
    Ok(())
}

fn single(u: &Uniformized, t: f64, tol: f64) -> DMatrix<f64> {
    let n = u.step.nrows();
    if u.rate == 0.0 || t == 0.0 {
        return DMatrix::identity(n, n);
    }
    let weights = poisson_weights(u.rate * t, tol);
    let mut power = DMatrix::identity(n, n);
    let mut out = DMatrix::zeros(n, n);
    for (m, &w) in weights.iter().enumerate() {
        if m > 0 {
            power = &power * &u.step;
        }
        if w > 0.0 {
            out += &power * w;
        }
    }
    out
}

/// `P(t)` at a single time.
pub fn transition_matrix(q: &GeneratorMatrix, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    check_tol(tol)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(single(&uniformize(q), t, tol))
}

/// `P(t)` at every point of `grid`, each within `tol` entrywise.
pub fn transition_matrices(q: &GeneratorMatrix, grid: TimeGrid, tol: f64) -> Result<TransitionMatrixSequence> {
    check_tol(tol)?;
    let u = uniformize(q);
    let n = q.dim();
    if u.rate == 0.0 {
        let id = DMatrix::identity(n, n);
        return Ok(TransitionMatrixSequence { grid, matrices: vec![id; grid.len()] });
    }

    let horizon_terms = poisson_weights(u.rate * grid.t_max(), tol).len();
    let matrices = if horizon_terms * n * n <= POWER_CACHE_LIMIT {
        let mut powers = Vec::with_capacity(horizon_terms);
        powers.push(DMatrix::identity(n, n));
        for m in 1..horizon_terms {
            let next = &powers[m - 1] * &u.step;
            powers.push(next);
        }
        grid.points()
            .map(|t| {
                let w = poisson_weights(u.rate * t, tol);
                mix(&powers[..w.len().min(powers.len())], &w)
            })
            .collect()
    } else {
        // Row-stochastic products are contractions, so per-step errors add:
        // splitting tol over the steps keeps the bound.
        let step = single(&u, grid.h(), tol / grid.steps() as f64);
        let mut out = Vec::with_capacity(grid.len());
        out.push(DMatrix::identity(n, n));
        for i in 1..grid.len() {
            let next = &out[i - 1] * &step;
            out.push(next);
        }
        out
    };
    Ok(TransitionMatrixSequence { grid, matrices })
}

/// Stationary probabilities `π` with `πQ = 0`, `Σπ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
}

/// Number of strongly connected components of the positive-rate graph.
pub(crate) fn communicating_classes(rates: &DMatrix<f64>, members: &[usize]) -> usize {
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = members.iter().map(|_| g.add_node(())).collect();
    for (a, &i) in members.iter().enumerate() {
        for (b, &j) in members.iter().enumerate() {
            if i != j && rates[(i, j)] > 0.0 {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
    }
    tarjan_scc(&g).len()
}

fn require_irreducible(q: &GeneratorMatrix) -> Result<()> {
    let all: Vec<usize> = (0..q.dim()).collect();
    let components = communicating_classes(q.rates(), &all);
    if components != 1 {
        return Err(Error::Reducible { components });
    }
    Ok(())
}

pub fn stationary(q: &GeneratorMatrix) -> Result<StationaryDistribution> {
    require_irreducible(q)?;
    let n = q.dim();
    let mut a = q.rates().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::Singular)?;
    // Round-off can leave far-tail entries a hair below zero.
    let probs: Vec<f64> = x.iter().map(|&p| if p < 0.0 && p > -1e-13 { 0.0 } else { p }).collect();
    Ok(StationaryDistribution { probs })
}

fn pi_matrix(pi: &StationaryDistribution) -> DMatrix<f64> {
    let n = pi.probs.len();
    DMatrix::from_fn(n, n, |_, j| pi.probs[j])
}

/// Deviation matrix `D = ∫(P(t) − Π)dt`, from `D = (Π − Q)^{-1} − Π`, which
/// is the unique solution of `QD = Π − I` with `πD = 0`.
pub fn deviation_matrix(q: &GeneratorMatrix, pi: &StationaryDistribution) -> Result<DMatrix<f64>> {
    require_irreducible(q)?;
    let big_pi = pi_matrix(pi);
    let inv = (&big_pi - q.rates()).try_inverse().ok_or(Error::Singular)?;
    Ok(inv - big_pi)
}

/// Time-reversed chain `q*_{k,n} = (π_n/π_k) q_{n,k}`.
pub fn reversed_chain(q: &GeneratorMatrix, pi: &StationaryDistribution) -> Result<GeneratorMatrix> {
    let space = *q.space();
    if let Some(i) = pi.probs.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::ZeroStationaryMass(space.label(i)));
    }
    let n = q.dim();
    let r = q.rates();
    let mut qs = DMatrix::from_fn(n, n, |k, m| if k == m { 0.0 } else { pi.probs[m] / pi.probs[k] * r[(m, k)] });
    close_rows(&mut qs);
    validate_generator(qs, space)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::chain::{generator_from_rows, StateSpace};

    fn two_state() -> GeneratorMatrix {
        generator_from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], StateSpace::Finite { n: 1 }).unwrap()
    }

    pub(crate) fn ehrenfest(n: usize, alpha: f64) -> GeneratorMatrix {
        let mut rows = vec![vec![0.0; n + 1]; n + 1];
        for k in 0..=n {
            if k < n {
                rows[k][k + 1] = alpha * (n - k) as f64;
            }
            if k > 0 {
                rows[k][k - 1] = alpha * k as f64;
            }
            rows[k][k] = -alpha * n as f64;
        }
        generator_from_rows(&rows, StateSpace::Finite { n }).unwrap()
    }

    #[test]
    fn two_state_closed_form() {
        let p = transition_matrix(&two_state(), 2f64.ln(), 1e-13).unwrap();
        assert!((p[(0, 0)] - 0.625).abs() < 1e-12);
        assert!((p[(0, 1)] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn identity_at_zero_and_for_zero_generator() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let seq = transition_matrices(&two_state(), grid, 1e-10).unwrap();
        assert_eq!(seq.at(0), &DMatrix::identity(2, 2));

        let zero = generator_from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], StateSpace::Finite { n: 1 }).unwrap();
        let seq = transition_matrices(&zero, grid, 1e-10).unwrap();
        assert!(seq.matrices.iter().all(|m| m == &DMatrix::identity(2, 2)));
    }

    #[test]
    fn bad_tolerance() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert!(matches!(transition_matrices(&two_state(), grid, 0.0), Err(Error::BadTolerance(_))));
        assert!(matches!(transition_matrices(&two_state(), grid, 0.1), Err(Error::BadTolerance(_))));
    }

    #[test]
    fn poisson_tail_below_tol() {
        for &a in &[0.1, 3.0, 50.0, 900.0] {
            let w = poisson_weights(a, 1e-12);
            let mass: f64 = w.iter().sum();
            assert!(1.0 - mass < 1e-11, "a = {a}: mass {mass}");
        }
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&two_state()).unwrap();
        assert!((pi.probs[0] - 0.5).abs() < 1e-14);
        let pi = stationary(&ehrenfest(4, 1.0)).unwrap();
        for (p, c) in pi.probs.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert!((p - c / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_rejected() {
        let q = generator_from_rows(&[vec![0.0, 0.0], vec![1.0, -1.0]], StateSpace::Finite { n: 1 }).unwrap();
        assert_eq!(stationary(&q).unwrap_err(), Error::Reducible { components: 2 });
    }

    #[test]
    fn deviation_two_state() {
        let q = two_state();
        let pi = stationary(&q).unwrap();
        let d = deviation_matrix(&q, &pi).unwrap();
        assert!((d[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((d[(0, 1)] + 0.25).abs() < 1e-14);
        for row in d.row_iter() {
            assert!(row.sum().abs() < 1e-14);
        }
    }

    #[test]
    fn reversed_examples() {
        let q = ehrenfest(4, 1.0);
        let pi = stationary(&q).unwrap();
        let rev = reversed_chain(&q, &pi).unwrap();
        assert!((rev.rates() - q.rates()).amax() < 1e-12);

        let cycle = generator_from_rows(
            &[vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]],
            StateSpace::Finite { n: 2 },
        )
        .unwrap();
        let pi = stationary(&cycle).unwrap();
        let rev = reversed_chain(&cycle, &pi).unwrap();
        assert!((rev.rates() - cycle.rates().transpose()).amax() < 1e-12);
        let pi_rev = stationary(&rev).unwrap();
        for (a, b) in pi.probs.iter().zip(&pi_rev.probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_rejected() {
        let pi = StationaryDistribution { probs: vec![1.0, 0.0] };
        assert_eq!(reversed_chain(&two_state(), &pi).unwrap_err(), Error::ZeroStationaryMass(1));
    }
}
