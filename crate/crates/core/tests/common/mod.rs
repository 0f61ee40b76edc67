#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symchain::{generator_from_rows, truncate_bdjump, BdJumpModel, GeneratorMatrix, StateSpace};

/// The four-state chain with absorbing ends whose weights are `(1, ϱ⁻¹, ϱ⁻², ϱ⁻³)`
/// up to scale when `β = 2`, `ϱ = 0.5`.
pub fn example1(alpha: f64, beta: f64, rho: f64) -> GeneratorMatrix {
    let rho0 = 1.0 + rho;
    let d = -alpha * (rho0 + rho * rho) - beta * rho0;
    let rows = vec![
        vec![0.0, 0.0, 0.0, 0.0],
        vec![alpha * rho0 + beta, d, beta * rho, alpha * rho * rho],
        vec![alpha, beta, d, (alpha * rho0 + beta) * rho],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    generator_from_rows(&rows, StateSpace::Finite { n: 3 }).unwrap()
}

/// Ehrenfest urn on `{0..n}`: `k → k+1` at `α(n−k)`, `k → k−1` at `αk`.
pub fn ehrenfest(n: usize, alpha: f64) -> GeneratorMatrix {
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

pub fn bd_window(lambda: f64, mu: f64, alpha: f64, m: i64) -> GeneratorMatrix {
    truncate_bdjump(&BdJumpModel::new(lambda, mu, alpha).unwrap(), -m, m).unwrap()
}

pub fn close(mut rates: DMatrix<f64>) -> DMatrix<f64> {
    for k in 0..rates.nrows() {
        rates[(k, k)] = 0.0;
        let s: f64 = rates.row(k).sum();
        rates[(k, k)] = -s;
    }
    rates
}

/// Dense random generator with off-diagonal rates in `[0.1, 2)`.
pub fn random_generator(rng: &mut ChaCha8Rng, len: usize) -> GeneratorMatrix {
    let rates = close(DMatrix::from_fn(len, len, |_, _| rng.random_range(0.1..2.0)));
    symchain::validate_generator(rates, StateSpace::Finite { n: len - 1 }).unwrap()
}

/// Reflection-symmetric generator (`q_{N−k,N−n} = q_{k,n}`) on `{0..N}` with
/// odd state count, no jumps across the center, and both halves irreducible.
pub fn random_symmetric_passage_chain(rng: &mut ChaCha8Rng, half: usize) -> GeneratorMatrix {
    let len = 2 * half + 1;
    let center = half;
    let mirror = |i: usize| len - 1 - i;
    let mut r = DMatrix::zeros(len, len);
    for k in 0..center {
        for n in 0..=center {
            if k == n {
                continue;
            }
            // neighbours always connected so each half is irreducible
            let v = if k.abs_diff(n) == 1 || rng.random_bool(0.5) { rng.random_range(0.2..2.0) } else { 0.0 };
            r[(k, n)] = v;
            r[(mirror(k), mirror(n))] = v;
        }
    }
    for n in 0..center {
        let v = if n + 1 == center || rng.random_bool(0.5) { rng.random_range(0.2..2.0) } else { 0.0 };
        r[(center, n)] = v;
        r[(center, mirror(n))] = v;
    }
    symchain::validate_generator(close(r), StateSpace::Finite { n: len - 1 }).unwrap()
}

/// Reflection-symmetric chain on `{0..N}` with absorbing 0 and N.
pub fn absorbing_symmetric(rng: &mut ChaCha8Rng, len: usize) -> GeneratorMatrix {
    let mirror = |i: usize| len - 1 - i;
    let mut r = DMatrix::zeros(len, len);
    for k in 1..len - 1 {
        if mirror(k) < k {
            continue;
        }
        for n in 0..len {
            if n == k {
                continue;
            }
            let v = if k.abs_diff(n) == 1 || rng.random_bool(0.4) { rng.random_range(0.1..3.0) } else { 0.0 };
            r[(k, n)] = v;
            r[(mirror(k), mirror(n))] = v;
        }
    }
    symchain::validate_generator(close(r), StateSpace::Finite { n: len - 1 }).unwrap()
}

pub fn harmonic_beta(q: &GeneratorMatrix, rng: &mut ChaCha8Rng) -> symchain::SimilarityWeights {
    let last = q.dim() - 1;
    symchain::similarity::harmonic_extension(q, &[(0, rng.random_range(0.2..5.0)), (last, rng.random_range(0.2..5.0))])
        .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
