use std::f64::consts::PI;

use hh_core::graph::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;

fn path(n: usize) -> DiscreteSpace {
    build_space(SpaceKind::Path, n, MeasureKind::Counting).unwrap()
}

/// `e^{−tA}` by scaling and squaring with a Taylor series.
fn expm_neg(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max() * t;
    let squarings = (norm.max(1.0).log2().ceil() as i32) + 4;
    let x = a * (-t / 2f64.powi(squarings));
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

#[test]
fn doubling_dimensions() {
    let p = build_space(SpaceKind::Path, 256, MeasureKind::Counting).unwrap();
    assert!((0.8..=1.2).contains(&p.doubling.dimension), "{:?}", p.doubling);
    let g = build_space(SpaceKind::Grid2d, 256, MeasureKind::Counting).unwrap();
    assert!((1.7..=2.3).contains(&g.doubling.dimension), "{:?}", g.doubling);
    assert!(g.doubling.doubling_constant >= 1.0 && g.doubling.doubling_constant < 2.0);
    for s in [&p, &g] {
        for x in [0, s.len() / 3, s.len() - 1] {
            let mut prev = 0.0;
            for r in 0..40 {
                let m = s.ball_measure(x, r as f64);
                assert!(m >= prev);
                prev = m;
            }
            assert_eq!(s.ball_measure(x, s.diameter()), s.len() as f64);
        }
    }
}

#[test]
fn heat_kernel_basics() {
    for measure in [MeasureKind::Counting, MeasureKind::Degree] {
        let s = build_space(SpaceKind::Grid2d, 100, measure).unwrap();
        let ones = DVector::from_element(s.len(), 1.0);
        for t in [0.01, 0.5, 3.0, 40.0] {
            let p = heat_kernel(&s, t).unwrap();
            assert!((&p * &ones - &ones).amax() < 1e-12, "{measure:?} t = {t}");
        }
        let tiny = heat_kernel(&s, 1e-6).unwrap();
        let off = (&tiny - DMatrix::identity(s.len(), s.len())).abs();
        let max_off = (0..s.len()).flat_map(|i| (0..s.len()).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| off[ij]).fold(0.0, f64::max);
        assert!(max_off <= 1e-5 && max_off > 0.0);
        let (a, b) = (heat_kernel(&s, 0.7).unwrap(), heat_kernel(&s, 1.9).unwrap());
        assert!(rel_diff(&(&a * &b), &heat_kernel(&s, 2.6).unwrap()) < 1e-10);
    }
    let s = path(64);
    let tiny = heat_kernel(&s, 1e-6).unwrap();
    let off = (0..64).flat_map(|i| (0..64).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| tiny[ij].abs()).fold(0.0, f64::max);
    assert!(off <= 1e-5);
    let tiny = heat_kernel(&s, 1e-9).unwrap();
    let off = (0..64).flat_map(|i| (0..64).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| tiny[ij].abs()).fold(0.0, f64::max);
    assert!(off <= 1e-8);
    assert!(heat_kernel(&s, 0.0).is_err());
}

#[test]
fn functional_calculus_matches_independent_paths() {
    for measure in [MeasureKind::Counting, MeasureKind::Degree] {
        let s = build_space(SpaceKind::BinaryTree, 63, measure).unwrap();
        let n = s.len();
        let one = spectral_multiplier(&s, &SymbolFunction::constant(1.0));
        assert!((one - DMatrix::identity(n, n)).amax() < 1e-12);
        let l = spectral_multiplier(&s, &SymbolFunction::identity());
        assert!(rel_diff(&l, &s.laplacian) < 1e-12);
        let h = spectral_multiplier(&s, &SymbolFunction::heat(1.3));
        assert!(rel_diff(&h, &expm_neg(&s.laplacian, 1.3)) < 1e-12);
        // symmetric for the μ-inner product
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&s.measure));
        let sym = &m * spectral_multiplier(&s, &SymbolFunction::new("1/(1+x)", |x| 1.0 / (1.0 + x)));
        assert!((&sym - sym.transpose()).amax() < 1e-12);
        // F(L^{1/2})² = L for F(x) = x
        let root = spectral_multiplier_root(&s, &SymbolFunction::identity(), 2.0).unwrap();
        assert!(rel_diff(&(&root * &root), &s.laplacian) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn functional_calculus_is_multiplicative(
        a in prop::collection::vec(-1.0f64..1.0, 1..5),
        b in prop::collection::vec(-1.0f64..1.0, 1..5),
    ) {
        let s = build_space(SpaceKind::Grid2d, 49, MeasureKind::Degree).unwrap();
        let poly = |c: Vec<f64>| SymbolFunction::new("p", move |x| c.iter().rev().fold(0.0, |acc, &k| acc * x + k));
        let (f, g) = (poly(a), poly(b));
        let lhs = spectral_multiplier(&s, &f.product(&g));
        let rhs = spectral_multiplier(&s, &f) * spectral_multiplier(&s, &g);
        prop_assert!((&lhs - &rhs).amax() <= 1e-10 * rhs.amax().max(1.0));
    }
}

#[test]
fn gaussian_bound_fits_path_heat_kernel() {
    let s = path(128);
    for t in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let fit = fit_gaussian_bound(&s, &[t], 1e-2).unwrap();
        assert!(fit.residual <= 0.1, "t = {t}: {fit:?}");
        assert!(fit.m > 1.0 && fit.c > 0.0 && fit.big_c.is_finite());
        // the bound holds with the reported constant
        let p = heat_kernel(&s, t).unwrap();
        for x in (0..128).step_by(9) {
            let vb = s.ball_measure(x, t.powf(1.0 / fit.m)).max(1.0);
            for y in 0..128 {
                let d = s.distance[(x, y)];
                let bound = fit.big_c / vb * (-d.powf(fit.m / (fit.m - 1.0)) / (fit.c * t.powf(1.0 / (fit.m - 1.0)))).exp();
                assert!(p[(x, y)].abs() <= bound * (1.0 + 1e-9) + 1e-12 * p.amax());
            }
        }
    }
    let late = fit_gaussian_bound(&s, &[3.0, 10.0, 30.0], 1e-2).unwrap();
    assert!((1.7..=2.6).contains(&late.m), "{late:?}");
}

fn direct_bessel_action(eta: &Cutoff, s: f64, xs: &[f64]) -> Vec<f64> {
    // η̂(ξ) by the trapezoid rule on supp η, then the inverse transform of (1+ξ²)^{s/2}η̂
    let m = 800;
    let h = (eta.b - eta.a) / m as f64;
    let nodes: Vec<(f64, f64)> = (0..=m).map(|k| (eta.a + k as f64 * h, eta.eval(eta.a + k as f64 * h))).collect();
    let dxi = 0.05;
    let xis: Vec<f64> = (-12000..=12000).map(|k| k as f64 * dxi).collect();
    let hat: Vec<(f64, f64)> = xis
        .iter()
        .map(|&xi| {
            nodes.iter().fold((0.0, 0.0), |(re, im), &(x, v)| (re + v * (xi * x).cos() * h, im - v * (xi * x).sin() * h))
        })
        .collect();
    xs.iter()
        .map(|&x| {
            xis.iter().zip(&hat).map(|(&xi, &(re, im))| (1.0 + xi * xi).powf(s / 2.0) * (re * (xi * x).cos() - im * (xi * x).sin())).sum::<f64>()
                * dxi
                / (2.0 * PI)
        })
        .collect()
}

#[test]
fn sobolev_norm_cases() {
    let eta = Cutoff::default();
    let zero = sobolev_norm(&SymbolFunction::constant(0.0), 1.0, 1.5, f64::INFINITY, &eta).unwrap();
    assert_eq!(zero.value, 0.0);
    // s = 0 is the plain norm of η·δ_tF
    let f = SymbolFunction::new("sin", |x| x.sin());
    let plain = sobolev_norm(&f, 2.0, 0.0, 2.0, &eta).unwrap().value;
    let n = 20000;
    let h = (eta.b - eta.a) / n as f64;
    let direct = ((0..n).map(|k| (eta.eval(eta.a + (k as f64 + 0.5) * h) * (2.0 * (eta.a + (k as f64 + 0.5) * h)).sin()).powi(2)).sum::<f64>() * h).sqrt();
    assert!((plain - direct).abs() < 1e-8 * direct);
    // s = 2: (1 − d²/dx²)η with η'' by differences
    let one = SymbolFunction::constant(1.0);
    let two = sobolev_norm(&one, 3.0, 2.0, f64::INFINITY, &eta).unwrap().value;
    let dh = 1e-4;
    let fd = (0..3000)
        .map(|k| {
            let x = eta.a + (k as f64 + 0.5) * (eta.b - eta.a) / 3000.0;
            (eta.eval(x) - (eta.eval(x + dh) - 2.0 * eta.eval(x) + eta.eval(x - dh)) / (dh * dh)).abs()
        })
        .fold(0.0, f64::max);
    assert!((two - fd).abs() < 1e-3 * fd, "{two} vs {fd}");
    // fractional s against direct quadrature of the Fourier integral
    let xs: Vec<f64> = (0..900).map(|k| eta.a + (k as f64 + 0.5) * (eta.b - eta.a) / 900.0).collect();
    let s = 1.3;
    let want = direct_bessel_action(&eta, s, &xs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let got = sobolev_norm(&one, 1.0, s, f64::INFINITY, &eta).unwrap();
    assert!(got.resolved());
    assert!((got.value - want).abs() < 2e-3 * want, "{} vs {want}", got.value);
    let wild = sobolev_norm(&SymbolFunction::new("cos", |x| (4000.0 * x).cos()), 1.0, 1.0, f64::INFINITY, &eta).unwrap();
    assert!(!wild.resolved());
    assert!(sobolev_norm(&one, 0.0, 1.0, 2.0, &eta).is_err());
}

#[test]
fn dyadic_partition_of_unity() {
    for k in 0..400 {
        let lambda = 10f64.powf(-3.0 + 6.0 * k as f64 / 399.0);
        assert!((partition_sum(lambda, -20, 20) - 1.0).abs() < 1e-10);
    }
    for k in 0..1000 {
        let x = -1.0 + 3.0 * k as f64 / 999.0;
        let v = partition_profile(x);
        assert!(v >= 0.0);
        if !(-0.25..=1.0).contains(&x) {
            assert_eq!(v, 0.0);
        }
    }
}

fn brute_maximal(space: &DiscreteSpace, op: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    let n = space.len();
    let mut out = vec![0.0f64; n];
    let mut r = 1.0;
    while r <= space.diameter() {
        for c in 0..n {
            let g: Vec<f64> = (0..n).map(|y| if space.distance[(c, y)] <= 3.0 * r { 0.0 } else { f[y] }).collect();
            let h = op * DVector::from_vec(g);
            let inside: Vec<usize> = (0..n).filter(|&y| space.distance[(c, y)] <= r).collect();
            let peak = inside.iter().map(|&y| h[y].abs()).fold(0.0, f64::max);
            for &x in &inside {
                out[x] = out[x].max(peak);
            }
        }
        r *= 2.0;
    }
    out
}

#[test]
fn maximal_operator_examples() {
    let s = build_space(SpaceKind::Path, 40, MeasureKind::Degree).unwrap();
    let balls = BallSystem::new(&s);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let f = random_graph_functions(&mut rng, &s, 1).remove(0).1;
    let op = spectral_multiplier(&s, &SymbolFunction::heat(1.0));
    let fast = maximal_mfl(&balls, &op, &f);
    let slow = brute_maximal(&s, &op, &f);
    assert!(fast.iter().zip(&slow).all(|(a, b)| (a - b).abs() <= 1e-14 * b.max(1.0)));
    assert!(maximal_mfl(&balls, &op, &vec![0.0; s.len()]).iter().all(|&v| v == 0.0));
    let identity = spectral_multiplier(&s, &SymbolFunction::constant(1.0));
    let exact_identity = DMatrix::identity(s.len(), s.len());
    assert!(maximal_mfl(&balls, &exact_identity, &f).iter().all(|&v| v == 0.0));
    assert!(maximal_mfl(&balls, &identity, &f).iter().all(|&v| v < 1e-13));
}

#[test]
fn maximal_bound_constant_is_stable() {
    let heat = SymbolFunction::heat(1.0);
    let mut constants = Vec::new();
    for (kind, size) in [(SpaceKind::Path, 128), (SpaceKind::Grid2d, 256)] {
        let s = build_space(kind, size, MeasureKind::Degree).unwrap();
        let balls = BallSystem::new(&s);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let fs: Vec<Vec<f64>> = random_graph_functions(&mut rng, &s, 5).into_iter().map(|(_, f)| f).collect();
        let rep = verify_maximal_bound(&s, &balls, &heat, &fs, SplitParams::default()).unwrap();
        assert!(rep.pass, "{}: spread {}", s.label, rep.spread);
        assert!(rep.rows.iter().all(|r| r.regular_ratio.is_finite() && r.remainder_ratio.is_finite()));
        constants.push(rep.fitted_c);
        let zero = verify_maximal_bound(&s, &balls, &SymbolFunction::constant(1.0), &fs, SplitParams::default()).unwrap();
        assert!(zero.fitted_c < 1e-12);
    }
    let spread = constants[0].max(constants[1]) / constants[0].min(constants[1]);
    assert!(spread <= 2.0, "{constants:?}");
}

#[test]
fn weighted_spectral_examples() {
    let s = build_space(SpaceKind::Grid2d, 144, MeasureKind::Degree).unwrap();
    let balls = BallSystem::new(&s);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let fs: Vec<Vec<f64>> = random_graph_functions(&mut rng, &s, 4).into_iter().map(|(_, f)| f).collect();
    let one = vec![GraphWeight::constant(&s, 1.0).unwrap()];
    let id = weighted_spectral_experiment(&s, &balls, &SymbolFunction::constant(1.0), &one, 4.0, 1.0, &fs).unwrap();
    assert!((id.rows[0].ratio - 1.0).abs() < 1e-12);
    assert_eq!(id.rows[0].characteristic, 1.0);
    let heat = weighted_spectral_experiment(&s, &balls, &SymbolFunction::heat(1.0), &one, 4.0, 1.0, &fs).unwrap();
    assert!(heat.rows[0].ratio <= 1.0 + 1e-12);
    // envelope fitted on small ε covers larger ε within a factor 2
    let ws: Vec<GraphWeight> = [0.0, 0.5, 1.0, 1.5].iter().map(|&e| GraphWeight::degree_power(&s, e).unwrap()).collect();
    let rep = weighted_spectral_experiment(&s, &balls, &SymbolFunction::new("x e^-x", |x| x * (-x).exp()), &ws, 4.0, 1.0, &fs).unwrap();
    let fitted = rep.rows[..2].iter().map(|r| r.scaled).fold(0.0, f64::max);
    assert!(rep.rows[2..].iter().all(|r| r.scaled <= 2.0 * fitted), "{rep:?}");
    assert!(rep.rows.iter().all(|r| r.characteristic >= 1.0 - 1e-12));
    assert!(weighted_spectral_experiment(&s, &balls, &SymbolFunction::heat(1.0), &one, 2.0, 1.0, &fs).is_err());
}

#[test]
fn ap_characteristic_on_balls() {
    let s = path(50);
    let balls = BallSystem::new(&s);
    for p in [1.5, 2.0, 3.0] {
        let w = GraphWeight::constant(&s, 2.5).unwrap();
        assert!((ball_ap_characteristic(&s, &balls, &w, p).unwrap() - 1.0).abs() < 1e-12);
    }
    let w = GraphWeight::distance_power(&s, 0, 0.5).unwrap();
    let vals: Vec<f64> = [2.0, 3.0, 4.0].iter().map(|&p| ball_ap_characteristic(&s, &balls, &w, p).unwrap()).collect();
    assert!(vals.windows(2).all(|v| v[1] <= v[0] + 1e-12));
    assert!(ball_ap_characteristic(&s, &balls, &w, 1.0).is_err());
}

#[test]
fn csv_round_trip() {
    let s = build_space(SpaceKind::BinaryTree, 31, MeasureKind::Degree).unwrap();
    let (mut e, mut m) = (Vec::new(), Vec::new());
    s.write_edges_csv(&mut e).unwrap();
    s.write_measure_csv(&mut m).unwrap();
    let back = DiscreteSpace::read_csv("tree", e.as_slice(), m.as_slice()).unwrap();
    assert_eq!(back.distance, s.distance);
    assert_eq!(back.measure, s.measure);
    assert!((&back.eigenvalues - &s.eigenvalues).amax() < 1e-12);
    assert!(DiscreteSpace::read_csv("bad", "a,b,length\n0,9,1\n".as_bytes(), m.as_slice()).is_err());
}
