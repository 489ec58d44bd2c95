use std::sync::Arc;

use hh_core::derivations::*;
use hh_core::geometry::{GridFunction, TGrid, ZGrid, ZSamples};
use hh_core::hermite::{CMatrix, OperatorMatrix, TruncatedBasis};
use hh_core::weyl::*;
use hh_core::HPoint;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis() -> Arc<TruncatedBasis> {
    Arc::new(TruncatedBasis::new(1, 16))
}

fn zgrid() -> Arc<ZGrid> {
    Arc::new(ZGrid::new(1, 8.0, 121).unwrap())
}

fn positive_packet(seed: u64) -> WavePacket {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = WavePacket::random(&mut rng, 1);
    p.lambda_center = 2.0;
    p
}

const INTERIOR: [f64; 6] = [1.5, 1.75, 2.0, 2.25, 2.5, 2.75];

#[test]
fn t_multiplication_is_theta_with_unit_constant() {
    let z = zgrid();
    let t = TGrid::power_of_two(24.0, 7).unwrap();
    let b = basis();
    let mut constants = Vec::new();
    for seed in 0..5 {
        let p = positive_packet(100 + seed);
        let f = GridFunction::from_fn(&z, t, &|q: &HPoint| p.eval(q));
        let c = verify_theorem_4_2(&f, &INTERIOR, &b, ThetaForm::Consistent).unwrap();
        assert!(!c.inconclusive);
        assert!(c.deviation < 1e-3, "{c:?}");
        constants.extend(c.per_lambda.iter().map(|x| x.1));
        let pr = verify_theorem_4_2(&f, &INTERIOR, &b, ThetaForm::Printed).unwrap();
        assert!(pr.deviation > 1e-2, "printed form unexpectedly fits: {pr:?}");
    }
    let mean: Complex64 = constants.iter().sum::<Complex64>() / constants.len() as f64;
    let spread = constants.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
    assert!((mean - 1.0).norm() < 1e-3, "{mean}");
    assert!(spread < 1e-2 * mean.norm(), "{spread}");
}

#[test]
fn zero_function_is_inconclusive() {
    let z = zgrid();
    let f = GridFunction::zeros(&z, TGrid::power_of_two(8.0, 5).unwrap());
    let r = verify_theorem_4_2(&f, &[1.0, 2.0], &basis(), ThetaForm::Consistent).unwrap();
    assert!(r.inconclusive);
}

fn heat_family() -> impl SmoothFamily {
    FnFamily::with_derivative(
        |l: f64, b: &Arc<TruncatedBasis>| {
            OperatorMatrix::diagonal(b, l, |mu| Complex64::new((-(2.0 * mu[0] as f64 + 1.0) * l / 4.0).exp(), 0.0))
        },
        |l: f64, b: &Arc<TruncatedBasis>| {
            OperatorMatrix::diagonal(b, l, |mu| {
                let e = 2.0 * mu[0] as f64 + 1.0;
                Complex64::new(-e / 4.0 * (-e * l / 4.0).exp(), 0.0)
            })
        },
    )
}

/// `B(λ) V_α^m(λ)` with `B(λ) = sin λ + 2` at `m = 1`, `α = 2`.
fn shift_family() -> impl SmoothFamily {
    let build = |l: f64, b: &Arc<TruncatedBasis>, c: f64| {
        let d = b.len();
        let mut e = CMatrix::zeros(d, d);
        // V_α^m Φ_{α+m⁺} = (−1)^{|m⁺|} Φ_{α+m⁻}: maps Φ_3 to −Φ_2
        e[(b.position(&[2]).unwrap(), b.position(&[3]).unwrap())] = Complex64::new(-c, 0.0);
        OperatorMatrix::new(b.clone(), l, e, 0).unwrap()
    };
    FnFamily::with_derivative(move |l: f64, b: &Arc<TruncatedBasis>| build(l, b, l.sin() + 2.0), move |l: f64, b: &Arc<TruncatedBasis>| build(l, b, l.cos()))
}

fn check_derivative_identity(fam: &dyn SmoothFamily) {
    let z = zgrid();
    let b = basis();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = ZPacket::random(&mut rng, 1, 0.4);
    let hs = ZSamples::from_fn(&z, |q| h.eval(q));
    for &lam in &[1.0, 2.0] {
        let r = verify_lemma_2_2_k1(fam, &hs, lam, 1e-3, &b).unwrap();
        assert!(r.consistent < 1e-4, "{r:?}");
        assert!(r.printed > 1e-2, "{r:?}");
        let coarse = verify_lemma_2_2_k1(fam, &hs, lam, 0.2, &b).unwrap();
        let fine = verify_lemma_2_2_k1(fam, &hs, lam, 0.1, &b).unwrap();
        let ratio = coarse.consistent / fine.consistent;
        assert!((3.5..=4.5).contains(&ratio), "step-halving ratio {ratio}");
    }
}

#[test]
fn derivative_identity_for_heat_diagonal() {
    check_derivative_identity(&heat_family());
}

#[test]
fn derivative_identity_for_partial_isometry() {
    check_derivative_identity(&shift_family());
}

#[test]
fn identity_family_has_zero_derivative() {
    let z = zgrid();
    let h = ZSamples::from_fn(&z, |q| Complex64::new((-q[0].norm_sqr() / 3.0).exp(), 0.0));
    let r = verify_lemma_2_2_k1(&IdentityFamily, &h, 1.0, 1e-3, &basis()).unwrap();
    assert!(r.scale < 1e-8, "{r:?}");
}

#[test]
fn heat_functional_is_bounded_over_levels() {
    let b = basis();
    let grid = LambdaGrid::positive_log(0.125, 8.0, 1.1).unwrap();
    let fam = heat_family();
    for req in [DerivationRequest::new(vec![0], vec![0], 0).unwrap(), DerivationRequest::new(vec![1], vec![1], 0).unwrap()] {
        let vals: Vec<f64> = (0..=8)
            .map(|n| hypothesis_functional(&fam, &req, n, &grid, &b, ThetaForm::Consistent).unwrap().value)
            .collect();
        assert!(vals.iter().all(|v| v.is_finite() && *v < 1e3), "{vals:?}");
    }
}
