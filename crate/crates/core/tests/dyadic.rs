use std::sync::{Arc, OnceLock};

use hh_core::dyadic::*;
use hh_core::heat::RadialMultiplier;
use rand::SeedableRng;

struct Setup {
    grid: Arc<BoxGrid>,
    cubes: CubeSystem,
    functions: Vec<Vec<f64>>,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let grid = Arc::new(BoxGrid::new(1, 1.0, 10, 50).unwrap());
        let cubes = build_cube_system(grid.clone(), 3, 0.5, 1.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let functions = random_test_functions(&mut rng, &grid, 6).into_iter().map(|(_, f)| f).collect();
        Setup { grid, cubes, functions }
    })
}

fn identity_kernel(levels: u32) -> GroupKernel {
    GroupKernel::truncated(&RadialMultiplier::Identity, levels, &setup().grid).unwrap()
}

#[test]
fn cube_system_properties_hold() {
    let s = setup();
    let check = s.cubes.verify();
    assert!(check.all_hold(8.0, 0.005), "{check:?}");
    assert_eq!(s.cubes.levels.len(), 3);
    for q in &s.cubes.cubes {
        for &c in &q.children {
            assert_eq!(s.cubes.cubes[c].parent, Some(s.cubes.cubes.iter().position(|x| std::ptr::eq(x, q)).unwrap()));
        }
    }
}

#[test]
fn zero_function_gives_root_only() {
    let s = setup();
    let root = central_root(&s.cubes);
    let zero = vec![0.0; s.grid.len()];
    let fam = build_sparse_family(&s.cubes, root, &zero, &zero, &SparseParams::for_dim(1)).unwrap();
    assert_eq!(fam.generations, vec![vec![root]]);
}

#[test]
fn sparse_families_are_sparse() {
    let s = setup();
    let root = central_root(&s.cubes);
    let params = SparseParams::for_dim(1);
    for f in &s.functions[1..] {
        let maximal = maximal_function(f, 2, &s.cubes).unwrap();
        let fam = build_sparse_family(&s.cubes, root, f, &maximal, &params).unwrap();
        let check = fam.verify(&s.cubes);
        assert!(check.holds(), "{check:?}");
        assert!(!fam.truncated);
    }
}

#[test]
fn sparse_operator_of_single_cube() {
    let s = setup();
    let q = s.cubes.levels[1][3];
    let fam = SparseFamily {
        root: q,
        generations: vec![vec![q]],
        selected_parent: vec![(q, None)],
        alphas: vec![],
        uncovered_exceptional: 0,
        truncated: false,
    };
    let mut chi = vec![0.0; s.grid.len()];
    for &p in &s.cubes.cubes[q].members {
        chi[p] = 1.0;
    }
    assert_eq!(sparse_operator(&fam, &s.cubes, 2, &chi).unwrap(), chi);
    assert!(sparse_operator(&fam, &s.cubes, 0, &chi).is_err());
}

#[test]
fn sparse_operator_matches_brute_force() {
    let s = setup();
    let root = central_root(&s.cubes);
    let f = &s.functions[2];
    let maximal = maximal_function(f, 2, &s.cubes).unwrap();
    let fam = build_sparse_family(&s.cubes, root, f, &maximal, &SparseParams::for_dim(1)).unwrap();
    let fast = sparse_operator(&fam, &s.cubes, 1, f).unwrap();
    for p in 0..s.grid.len() {
        let mut want = 0.0;
        for q in fam.all() {
            let m = &s.cubes.cubes[q].members;
            if m.contains(&p) {
                want += m.iter().map(|&i| f[i].abs()).sum::<f64>() / m.len() as f64;
            }
        }
        assert!((fast[p] - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn maximal_function_basics() {
    let s = setup();
    let c = vec![2.5; s.grid.len()];
    for order in [1, 2] {
        assert!(maximal_function(&c, order, &s.cubes).unwrap().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }
    assert!(maximal_function(&c, 3, &s.cubes).is_err());
    let f = &s.functions[0];
    let m1 = maximal_function(f, 1, &s.cubes).unwrap();
    let m2 = maximal_function(f, 2, &s.cubes).unwrap();
    for p in 0..f.len() {
        assert!(m1[p] >= f[p].abs());
        assert!(m2[p] >= m1[p] - 1e-12);
    }
}

#[test]
fn ap_characteristics() {
    let s = setup();
    for p in [1.5, 2.0, 4.0] {
        let one = Weight::constant(&s.grid, 1.0).unwrap();
        assert_eq!(ap_characteristic(&one, p, &s.cubes).unwrap(), 1.0);
        let c = Weight::constant(&s.grid, 3.7).unwrap();
        assert!((ap_characteristic(&c, p, &s.cubes).unwrap() - 1.0).abs() < 1e-12);
    }
    let one = Weight::constant(&s.grid, 1.0).unwrap();
    assert!(ap_characteristic(&one, 1.0, &s.cubes).is_err());
    assert!(Weight::new("bad", vec![0.0; s.grid.len()]).is_err());
    for eps in [0.1, 0.2, 0.3] {
        let w = Weight::rho_power(&s.grid, eps).unwrap();
        let vals: Vec<f64> = [2.0, 3.0, 4.0].iter().map(|&p| ap_characteristic(&w, p, &s.cubes).unwrap()).collect();
        assert!(vals[0] > 1.0);
        assert!(vals.windows(2).all(|v| v[1] <= v[0] + 1e-12), "{vals:?}");
    }
}

#[test]
fn identity_kernel_telescopes_to_heat_difference() {
    let s = setup();
    let a = identity_kernel(3);
    let b = GroupKernel::heat_difference(3, &s.grid).unwrap();
    let f = &s.functions[1];
    let (ta, tb) = (a.apply(&s.grid, f), b.apply(&s.grid, f));
    let scale = tb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(ta.iter().zip(&tb).all(|(x, y)| (x - y).abs() <= 1e-6 * scale));
    assert!(a.apply(&s.grid, &vec![0.0; s.grid.len()]).iter().all(|&v| v == 0.0));
}

#[test]
fn truncated_operator_is_symmetric() {
    let s = setup();
    let k = identity_kernel(4);
    let (f, g) = (&s.functions[0], &s.functions[3]);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let lhs = dot(&k.apply(&s.grid, f), g);
    let rhs = dot(f, &k.apply(&s.grid, g));
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
}

#[test]
fn grand_maximal_of_zero_vanishes() {
    let s = setup();
    let gm = grand_maximal(&identity_kernel(2), &s.cubes, &vec![0.0; s.grid.len()]);
    assert!(gm.tstar.iter().chain(&gm.mtn).all(|&v| v == 0.0));
}

#[test]
fn quintic_bump_is_a_smooth_cutoff() {
    assert_eq!(quintic_bump(0.0), 1.0);
    assert_eq!(quintic_bump(0.5), 1.0);
    assert_eq!(quintic_bump(1.0), 0.0);
    assert!((quintic_bump(0.75) - 0.5).abs() < 1e-15);
    let h = 1e-6;
    for x in [0.5 + h, 1.0 - h] {
        let d = (quintic_bump(x + h) - quintic_bump(x - h)) / (2.0 * h);
        assert!(d.abs() < 1e-4);
    }
    let mut prev = 1.0;
    for i in 0..=100 {
        let v = quintic_bump(0.5 + 0.005 * i as f64);
        assert!(v <= prev);
        prev = v;
    }
}

#[test]
fn far_part_vanishes_when_everything_is_near() {
    let s = setup();
    let k = identity_kernel(2);
    let targets: Vec<usize> = (0..s.grid.len()).step_by(97).collect();
    let out = far_part(&k, &s.grid, &s.functions[0], &targets, 0, 100.0);
    assert!(out.iter().all(|&v| v == 0.0));
}

#[test]
fn sparse_domination_generalises() {
    let s = setup();
    let k = identity_kernel(4);
    let rep = sparse_domination_experiment(&k, &s.cubes, central_root(&s.cubes), &s.functions, &SparseParams::for_dim(1)).unwrap();
    assert_eq!(rep.rows.len(), 6);
    assert!(rep.rows.iter().all(|r| r.check.holds()));
    assert!(rep.pass, "degradation {}", rep.degradation);
}

#[test]
fn weak_type_constant_is_stable_in_truncation() {
    let s = setup();
    let kernels: Vec<(u32, GroupKernel)> = [2u32, 4, 6].iter().map(|&n| (n, identity_kernel(n))).collect();
    let rep = weak_type_experiment(&kernels, &s.cubes, &s.functions, 16).unwrap();
    assert!(rep.rows.iter().all(|r| r.constant > 0.0));
    assert!(rep.pass, "spread {}", rep.spread);
    assert!(rep.tstar_spread <= 2.0, "{}", rep.tstar_spread);
}

#[test]
fn unweighted_ratio_respects_schur_bound() {
    let s = setup();
    let k = identity_kernel(3);
    let w = vec![Weight::constant(&s.grid, 1.0).unwrap()];
    let rep = weighted_norm_experiment(&k, &s.cubes, &w, 4.0, &s.functions).unwrap();
    assert_eq!(rep.rows[0].characteristic, 1.0);
    assert!(rep.rows[0].max_ratio <= rep.schur_bound * (1.0 + 1e-12));
    assert!(weighted_norm_experiment(&k, &s.cubes, &w, 2.0, &s.functions).is_err());
}
