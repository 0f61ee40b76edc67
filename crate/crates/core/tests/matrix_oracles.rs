//! Uniformization, stationary law and deviation matrix checked against
//! independent computations.

mod common;

use common::{max_abs, random_generator, rng};
use nalgebra::DMatrix;
use proptest::prelude::*;
use symchain::transient::{deviation_matrix, stationary, transition_matrices, transition_matrix};
use symchain::{GeneratorMatrix, TimeGrid};

/// Classical RK4 on `P' = PQ` from `P(0) = I`.
fn rk4(q: &GeneratorMatrix, t: f64, steps: usize) -> DMatrix<f64> {
    let n = q.dim();
    let r = q.rates();
    let h = t / steps as f64;
    let mut p = DMatrix::<f64>::identity(n, n);
    for _ in 0..steps {
        let k1 = &p * r;
        let k2 = (&p + &k1 * (h / 2.0)) * r;
        let k3 = (&p + &k2 * (h / 2.0)) * r;
        let k4 = (&p + &k3 * h) * r;
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniformization_matches_rk4(seed in any::<u64>(), t in 0.05f64..3.0) {
        let q = random_generator(&mut rng(seed), 6);
        let p = transition_matrix(&q, t, 1e-13).unwrap();
        let reference = rk4(&q, t, 4000);
        prop_assert!(max_abs(&(&p - &reference)) < 1e-10);
        for row in p.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= -1e-15));
        }
    }

    #[test]
    fn chapman_kolmogorov(seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let q = random_generator(&mut rng(seed), 6);
        let lhs = transition_matrix(&q, s + t, 1e-13).unwrap();
        let rhs = transition_matrix(&q, s, 1e-13).unwrap() * transition_matrix(&q, t, 1e-13).unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-11);
    }

    #[test]
    fn deviation_identities(seed in any::<u64>()) {
        let q = random_generator(&mut rng(seed), 6);
        let pi = stationary(&q).unwrap();
        let d = deviation_matrix(&q, &pi).unwrap();
        let big_pi = DMatrix::from_fn(6, 6, |_, j| pi.probs[j]);
        let target = &big_pi - DMatrix::<f64>::identity(6, 6);
        prop_assert!(max_abs(&(q.rates() * &d - &target)) < 1e-10);
        prop_assert!(max_abs(&(&d * q.rates() - &target)) < 1e-10);
        for j in 0..6 {
            let col: f64 = (0..6).map(|i| pi.probs[i] * d[(i, j)]).sum();
            prop_assert!(col.abs() < 1e-12);
            prop_assert!(d.row(j).sum().abs() < 1e-10);
        }
    }
}

#[test]
fn stationary_is_the_long_run_limit() {
    for seed in 0..5 {
        let q = random_generator(&mut rng(seed), 6);
        let pi = stationary(&q).unwrap();
        let p = transition_matrix(&q, 60.0, 1e-13).unwrap();
        for k in 0..6 {
            for n in 0..6 {
                assert!((p[(k, n)] - pi.probs[n]).abs() < 1e-10);
            }
        }
        assert!((pi.probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn deviation_matches_time_integral() {
    // ∫_0^T (P(t) − Π) dt by composite Simpson; the integrand decays
    // exponentially so the tail beyond T is negligible.
    let q = random_generator(&mut rng(7), 6);
    let pi = stationary(&q).unwrap();
    let d = deviation_matrix(&q, &pi).unwrap();
    let grid = TimeGrid::new(40.0, 8000).unwrap();
    let p = transition_matrices(&q, grid, 1e-13).unwrap();
    let h = grid.h();
    for k in 0..6 {
        for n in 0..6 {
            let f: Vec<f64> = p.entry_trace(k, n).iter().map(|v| v - pi.probs[n]).collect();
            let last = f.len() - 1;
            let inner: f64 = (1..last).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f[i]).sum();
            let integral = h / 3.0 * (f[0] + inner + f[last]);
            assert!((integral - d[(k, n)]).abs() < 1e-6, "({k},{n}): {integral} vs {}", d[(k, n)]);
        }
    }
}

#[test]
fn sequence_agrees_with_single_evaluations() {
    let q = random_generator(&mut rng(11), 5);
    let grid = TimeGrid::new(2.0, 40).unwrap();
    let seq = transition_matrices(&q, grid, 1e-13).unwrap();
    for i in [0, 1, 17, 40] {
        let single = transition_matrix(&q, grid.point(i), 1e-13).unwrap();
        assert!(max_abs(&(seq.at(i) - single)) < 1e-12);
    }
}

#[test]
fn stepped_path_matches_cached_powers() {
    // A large window forces the step-wise branch; compare with single-time
    // evaluations at a few points.
    let q = common::bd_window(1.0, 1.0, 0.5, 150);
    let grid = TimeGrid::new(40.0, 200).unwrap();
    let seq = transition_matrices(&q, grid, 1e-12).unwrap();
    for i in [1, 100, 200] {
        let single = transition_matrix(&q, grid.point(i), 1e-12).unwrap();
        assert!(max_abs(&(seq.at(i) - single)) < 1e-10);
    }
}
