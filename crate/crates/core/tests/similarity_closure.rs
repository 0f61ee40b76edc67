//! Strong similarity carries central symmetry to the transformed chain.

mod common;

use common::{absorbing_symmetric, harmonic_beta};
use proptest::prelude::*;
use symchain::similarity::{
    apply_similarity, example2_family, harmonic_residuals, transformed_weights, verify_theorem5, HARMONIC_TOL,
};
use symchain::symmetry::{detect_symmetry, verify_generator_symmetry, DETECT_TOL};
use symchain::SymmetryCertificate;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transformed_certificate_verifies(seed in any::<u64>(), len in 5usize..=11, chain_twice in any::<bool>()) {
        let mut rng = common::rng(seed);
        let base = absorbing_symmetric(&mut rng, len);
        let mut q = base.clone();
        let mut cert = SymmetryCertificate::uniform(q.space()).unwrap();
        if chain_twice {
            // one similarity first, so the certificate being carried is not constant
            let first = harmonic_beta(&q, &mut rng);
            let (q1, c1) = verify_theorem5(&q, &cert, &first).unwrap();
            let detected = detect_symmetry(&q1, DETECT_TOL).unwrap().certificate;
            for (a, b) in detected.weights.iter().zip(&c1.weights) {
                prop_assert!((a - b).abs() <= 1e-9 * b);
            }
            q = q1;
            cert = c1;
        }
        let beta = harmonic_beta(&q, &mut rng);
        prop_assert!(harmonic_residuals(&q, &beta).iter().all(|&r| r < HARMONIC_TOL));
        let qt = apply_similarity(&q, &beta).unwrap();
        let xt = SymmetryCertificate::new(q.space(), transformed_weights(&cert, &beta)).unwrap();
        let check = verify_generator_symmetry(&qt, &xt, 1e-9).unwrap();
        prop_assert!(check.pass && check.max_residual < 1e-9, "residual {}", check.max_residual);
        prop_assert!(xt.ratio_identity_residual() < 1e-12);
    }
}

#[test]
fn similarity_with_its_inverse_is_identity() {
    let mut rng = common::rng(3);
    let q = absorbing_symmetric(&mut rng, 7);
    let beta = harmonic_beta(&q, &mut rng);
    let back = apply_similarity(&apply_similarity(&q, &beta).unwrap(), &beta.inverse()).unwrap();
    assert!(common::max_abs(&(back.rates() - q.rates())) < 1e-13);
}

#[test]
fn non_harmonic_beta_is_rejected() {
    let mut rng = common::rng(5);
    let q = absorbing_symmetric(&mut rng, 7);
    let beta = symchain::SimilarityWeights::new((0..7).map(|i| 1.0 + i as f64 * i as f64).collect()).unwrap();
    assert!(matches!(apply_similarity(&q, &beta), Err(symchain::Error::NonHarmonic { .. })));
}

#[test]
fn example2_family_interior() {
    for (lambda, mu) in [(1.0, 1.0), (1.5, 0.5), (0.7, 1.2)] {
        for eta in [0.0, 0.5, 3.0] {
            let fam = example2_family(lambda, mu, eta, 12).unwrap();
            assert!(fam.interior_residual < 1e-12, "λ={lambda} μ={mu} η={eta}");
            assert!(fam.interior_symmetry().unwrap() < 1e-10);
            for n in -11..=11 {
                let want_birth = fam.beta_at(n + 1) / fam.beta_at(n) * lambda;
                let idx = (n + 12) as usize;
                assert!((fam.transformed.rates()[(idx, idx + 1)] - want_birth).abs() < 1e-14 * want_birth.max(1.0));
                assert!((fam.birth_rate(n) + fam.death_rate(n) - lambda - mu).abs() < 1e-12);
            }
        }
    }
}
