use std::sync::Arc;

use serde_json::json;

use super::ExperimentConfig;
use crate::dyadic::{
    ap_characteristic, build_cube_system, build_sparse_family, central_root, maximal_function, random_test_functions,
    sparse_domination_experiment, weak_type_experiment, weighted_norm_experiment, BoxGrid, CubeSystem, GroupKernel,
    SparseParams, Weight,
};
use crate::error::{Error, Result};
use crate::heat::RadialMultiplier;
use crate::report::{Check, Plot, Report};

struct Setup {
    grid: Arc<BoxGrid>,
    cubes: CubeSystem,
    functions: Vec<Vec<f64>>,
    packets: serde_json::Value,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    if cfg.n != 1 {
        return Err(Error::Usage(format!("n: the dyadic experiments run at n = 1 only, got n = {}", cfg.n)));
    }
    let g = cfg.grid_or(&[1.0, 10.0, 50.0])?;
    let grid = Arc::new(BoxGrid::new(1, g[0], g[1] as usize, g[2] as usize)?);
    let cubes = build_cube_system(grid.clone(), 3, 0.5, 1.2)?;
    let mut rng = cfg.rng();
    let drawn = random_test_functions(&mut rng, &grid, cfg.functions + 1);
    let packets = json!(drawn.iter().map(|d| &d.0).collect::<Vec<_>>());
    Ok(Setup { grid, cubes, functions: drawn.into_iter().map(|d| d.1).collect(), packets })
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

pub(super) fn run_sparse(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("sparse");
    let s = setup(cfg)?;
    let cube = s.cubes.verify();
    let anchor = "dyadic cubes on a space of homogeneous type";
    rep.checks.push(Check::at_most("cube_coverage_defect", anchor, cube.coverage_defect, 0.005));
    rep.checks.push(Check::at_least("cube_nesting", anchor, flag(cube.nesting), 1.0));
    rep.checks.push(Check::at_least("cube_unique_ancestor", anchor, flag(cube.unique_ancestor), 1.0));
    rep.checks.push(Check::at_least("cube_ball_sandwich", anchor, flag(cube.sandwich), 1.0));

    let root = central_root(&s.cubes);
    let params = SparseParams::for_dim(1);
    let (mut invariants, mut fraction) = (true, 0.0f64);
    for f in &s.functions[1..] {
        let maximal = maximal_function(f, 2, &s.cubes)?;
        let fam = build_sparse_family(&s.cubes, root, f, &maximal, &params)?;
        let c = fam.verify(&s.cubes);
        invariants &= c.disjoint && c.nested && c.half_measure && !fam.truncated;
        fraction = fraction.max(c.first_generation_fraction);
    }
    let anchor = "Calderón–Zygmund selection of the sparse family";
    rep.checks.push(Check::at_least("sparse_invariants", anchor, flag(invariants), 1.0));
    rep.checks.push(Check::at_most("sparse_first_generation_fraction", anchor, fraction, 0.5));

    let middle = cfg.levels[cfg.levels.len() / 2];
    let kernel = GroupKernel::truncated(&RadialMultiplier::Identity, middle, &s.grid)?;
    let dom = sparse_domination_experiment(&kernel, &s.cubes, root, &s.functions, &params)?;
    let mut ratios = Plot::new("sparse_ratios", "function", "|T^N f| / sparse bound");
    for (i, r) in dom.rows.iter().enumerate() {
        ratios.push(i as f64, r.ratio, &r.role);
    }
    rep.checks.push(Check::at_most("sparse_domination_degradation", "sparse domination of the truncated operators", dom.degradation, 2.0));

    let kernels: Vec<(u32, GroupKernel)> = cfg
        .levels
        .iter()
        .map(|&n| Ok((n, GroupKernel::truncated(&RadialMultiplier::Identity, n, &s.grid)?)))
        .collect::<Result<_>>()?;
    let weak = weak_type_experiment(&kernels, &s.cubes, &s.functions, 16)?;
    let mut curve = Plot::new("weak_type", "lambda", "measure");
    for row in &weak.rows {
        for p in &row.curve {
            curve.push(p.lambda, p.measure, &format!("N={}", row.levels));
        }
    }
    rep.checks.push(Check::at_most("weak_type_constant_spread", "Also, we will have (weak type bound uniform in N)", weak.spread, 2.0));
    rep.inputs = json!({
        "multiplier": "identity",
        "grid": &*s.grid,
        "cubes": &s.cubes.report,
        "test_functions": s.packets,
        "sparse_domination": dom,
        "weak_type": weak.rows.iter().map(|r| json!({"N": r.levels, "constant": r.constant, "tstar": r.tstar_bound, "mtn": r.mtn_bound})).collect::<Vec<_>>(),
    });
    rep.plots.push(ratios);
    rep.plots.push(curve);
    Ok(rep)
}

pub(super) fn run_weighted(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("weighted");
    let s = setup(cfg)?;
    let anchor = "Muckenhoupt A_p characteristic";
    let one = Weight::constant(&s.grid, 1.0)?;
    let mut unit = 0.0f64;
    for p in [1.5, 2.0, 4.0] {
        unit = unit.max((ap_characteristic(&one, p, &s.cubes)? - 1.0).abs());
    }
    rep.checks.push(Check::at_most("ap_unit_weight", anchor, unit, 0.0));

    let mut increase = 0.0f64;
    let mut ap = Plot::new("ap_by_p", "p", "characteristic");
    let mut weights = Vec::new();
    for &eps in &cfg.weights {
        let w = if eps == 0.0 { Weight::constant(&s.grid, 1.0)? } else { Weight::rho_power(&s.grid, eps)? };
        let vals: Vec<f64> = [2.0, 3.0, 4.0].iter().map(|&p| ap_characteristic(&w, p, &s.cubes)).collect::<Result<_>>()?;
        for (p, v) in [2.0, 3.0, 4.0].iter().zip(&vals) {
            ap.push(*p, *v, &w.label);
        }
        increase = increase.max(vals.windows(2).map(|v| v[1] - v[0]).fold(f64::NEG_INFINITY, f64::max));
        weights.push(w);
    }
    rep.checks.push(Check::at_most("ap_nonincreasing_in_p", anchor, increase, 1e-12));

    let middle = cfg.levels[cfg.levels.len() / 2];
    let kernel = GroupKernel::truncated(&RadialMultiplier::Identity, middle, &s.grid)?;
    let w = weighted_norm_experiment(&kernel, &s.cubes, &weights, cfg.p, &s.functions)?;
    let mut scatter = Plot::new("weighted_scatter", "[w]_{A_{p/2}}", "max ‖Tf‖/‖f‖ in L^p(w)");
    for row in &w.rows {
        scatter.push(row.characteristic, row.max_ratio, &row.weight);
    }
    let min_char = w.rows.iter().map(|r| r.characteristic).fold(f64::INFINITY, f64::min);
    rep.checks.push(Check::at_least("weighted_characteristic_at_least_one", anchor, min_char, 1.0 - 1e-12));
    if let Some(row) = w.rows.iter().find(|r| r.weight == one.label) {
        rep.checks.push(Check::at_most(
            "unweighted_ratio_below_schur_bound",
            "weighted norm inequality for T_M",
            row.max_ratio / w.schur_bound,
            1.0 + 1e-12,
        ));
    }
    rep.inputs = json!({ "test_functions": s.packets, "weighted": w });
    rep.plots.push(ap);
    rep.plots.push(scatter);
    Ok(rep)
}
