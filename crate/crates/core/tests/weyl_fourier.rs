use std::f64::consts::PI;
use std::sync::Arc;

use hh_core::geometry::{GridFunction, TGrid, ZGrid, ZSamples};
use hh_core::hermite::{OperatorMatrix, TruncatedBasis};
use hh_core::weyl::*;
use hh_core::HPoint;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zgrid() -> Arc<ZGrid> {
    Arc::new(ZGrid::new(1, 8.0, 121).unwrap())
}

fn basis() -> Arc<TruncatedBasis> {
    Arc::new(TruncatedBasis::new(1, 16))
}

#[test]
fn single_lambda_plancherel() {
    let g = zgrid();
    let b = basis();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let p = ZPacket::random(&mut rng, 1, 0.4);
        let lam = 4.0 * p.width;
        let s = ZSamples::from_fn(&g, |z| p.eval(z));
        let w = weyl_transform(&s, lam, &b).unwrap().value;
        let lhs = p.l2_norm_sqr();
        let rhs = (2.0 * PI).powi(-1) * lam * w.hs_norm().powi(2);
        assert!((lhs - rhs).abs() < 1e-4 * lhs, "{lhs} vs {rhs}");
    }
}

#[test]
fn inverse_of_rank_one_is_gaussian() {
    let b = Arc::new(TruncatedBasis::new(1, 6));
    let lam = 1.5;
    let inv = inverse_weyl(&hh_core::hermite::spectral_projection(0, lam, &b)).unwrap();
    for r in [0.0, 0.4, 1.1] {
        let z = [Complex64::new(r, 0.3)];
        let expect = (2.0 * PI).powf(-0.5) * lam * (2.0 * PI).powf(-0.5) * (-lam * z[0].norm_sqr() / 4.0).exp();
        assert!((inv.eval(&z).re - expect).abs() < 1e-14);
    }
}

#[test]
fn ladder_identities_corrected_forms_hold() {
    let g = zgrid();
    let b = basis();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2 {
        let p = ZPacket::random(&mut rng, 1, 0.3);
        for &lam in &[0.5, 1.0, 2.0] {
            let r = ladder_identities(&p, 0, lam, &g, &b).unwrap();
            assert!(r.corrected_max() < 1e-5, "{r:?}");
            assert!(r.printed_max() > 1e-3, "{r:?}");
        }
    }
}

#[test]
fn identity_multiplier_round_trip() {
    let z = Arc::new(ZGrid::new(1, 7.0, 71).unwrap());
    let t = TGrid::power_of_two(24.0, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = WavePacket::random(&mut rng, 1);
    let f = GridFunction::from_fn(&z, t, &|q: &HPoint| p.eval(q));
    let grid = LambdaGrid::signed_log(0.125, 8.0, 1.05).unwrap();
    let b = basis();
    let m = MultiplierFamily::identity(&grid, &b);
    let out = apply_fourier_multiplier(&m, &f).unwrap().value;
    let err = out.zip_with(&f, |a, b| a - b).l2_norm() / f.l2_norm();
    assert!(err < 1e-3, "relative error {err}");
    let fhat = group_fourier(&f, &grid, &b).unwrap().value;
    let mass = plancherel_mass(&fhat);
    let exact = p.l2_norm_sqr();
    assert!((mass - exact).abs() < 1e-3 * exact, "{mass} vs {exact}");
}

#[test]
fn family_directory_round_trip() {
    let b = Arc::new(TruncatedBasis::new(1, 3));
    let grid = LambdaGrid::signed_log(0.5, 2.0, 2.0).unwrap();
    let fam = FnFamily::with_derivative(
        |l: f64, b: &Arc<TruncatedBasis>| OperatorMatrix::diagonal(b, l, |mu| Complex64::new((-l.abs() * mu[0] as f64).exp(), l)),
        |l: f64, b: &Arc<TruncatedBasis>| OperatorMatrix::diagonal(b, l, |mu| Complex64::new(-(mu[0] as f64) * l.signum() * (-l.abs() * mu[0] as f64).exp(), 1.0)),
    );
    let m = MultiplierFamily::sample(&fam, &grid, &b);
    let dir = tempfile::tempdir().unwrap();
    m.write_dir(dir.path()).unwrap();
    let back = MultiplierFamily::read_dir(dir.path()).unwrap();
    assert_eq!(back.grid, m.grid);
    for (a, c) in back.matrices.iter().zip(&m.matrices) {
        assert!((a - c).max_abs() < 1e-15);
    }
    assert!(back.d_lambda.is_some());
}

#[test]
fn lambda_grid_spec_parses() {
    let g = LambdaGrid::parse("0.125,8,1.3").unwrap();
    assert_eq!(g.nodes.len() % 2, 0);
    assert!((g.nodes[0] + 8.0).abs() < 1e-12);
    assert!(LambdaGrid::parse("1,2").is_err());
    // trapezoid in ln λ integrates 1/λ exactly
    let pos = LambdaGrid::positive_log(0.125, 8.0, 1.3).unwrap();
    let s: f64 = pos.nodes.iter().zip(&pos.weights).map(|(l, w)| w / l).sum();
    assert!((s - 64f64.ln()).abs() < 1e-12);
}
