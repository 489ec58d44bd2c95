use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use super::{space_name, ExperimentConfig};
use crate::error::Result;
use crate::graph::{
    build_space, fit_gaussian_bound, heat_kernel, maximal_mfl, random_graph_functions, spectral_multiplier,
    spectral_multiplier_root, verify_maximal_bound, weighted_spectral_experiment, BallSystem, GraphWeight, MeasureKind,
    SpaceKind, SplitParams, SymbolFunction,
};
use crate::report::{Check, Plot, Report};

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

fn polynomial(c: Vec<f64>) -> SymbolFunction {
    SymbolFunction::new("polynomial", move |x| c.iter().rev().fold(0.0, |acc, &k| acc * x + k))
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("graph");
    let mut rng = cfg.rng();
    let heat = SymbolFunction::heat(1.0);
    let (mut row_sum, mut semigroup, mut homomorphism, mut root, mut vanish) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut constants = Vec::new();
    let mut within = Vec::new();
    let mut spaces = Vec::new();
    let mut fit_plot = Plot::new("gaussian_fit", "t", "fitted m");
    let mut ratios = Plot::new("maximal_ratios", "function", "‖M_{F(L)} f‖ / ‖M_2 f‖");
    let mut scatter = Plot::new("weighted_scatter", "[w]_{A_{p/2}}", "max ‖F(L)f‖/‖f‖ in L^p(w)");
    for &(kind, size) in &cfg.spaces {
        let s = build_space(kind, size, MeasureKind::Degree)?;
        let n = s.len();
        let tag = format!("{}{n}", space_name(kind));
        let ones = DVector::from_element(n, 1.0);
        for t in [0.01, 0.5, 3.0, 40.0] {
            row_sum = row_sum.max((heat_kernel(&s, t)? * &ones - &ones).amax());
        }
        let (a, b) = (heat_kernel(&s, 0.7)?, heat_kernel(&s, 1.9)?);
        semigroup = semigroup.max(rel_diff(&(&a * &b), &heat_kernel(&s, 2.6)?));
        for _ in 0..3 {
            let coeffs = |rng: &mut rand_chacha::ChaCha8Rng| (0..rng.gen_range(1..5)).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (f, g) = (polynomial(coeffs(&mut rng)), polynomial(coeffs(&mut rng)));
            let lhs = spectral_multiplier(&s, &f.product(&g));
            let rhs = spectral_multiplier(&s, &f) * spectral_multiplier(&s, &g);
            homomorphism = homomorphism.max((&lhs - &rhs).amax() / rhs.amax().max(1.0));
        }

        let late = fit_gaussian_bound(&s, &[3.0, 10.0, 30.0], 1e-2)?;
        let m = late.m;
        let power = SymbolFunction::new("x^m", move |x: f64| x.max(0.0).powf(m));
        root = root.max(rel_diff(&spectral_multiplier_root(&s, &power, m)?, &s.laplacian));
        let mut per_t = Vec::new();
        if kind == SpaceKind::Path {
            for t in [0.1, 0.3, 1.0, 3.0, 10.0] {
                let fit = fit_gaussian_bound(&s, &[t], 1e-2)?;
                fit_plot.push(t, fit.m, &s.label);
                rep.checks.push(Check::at_most(
                    &format!("gaussian_bound_residual_{tag}_t{t}"),
                    "heat kernel Gaussian upper bound",
                    fit.residual,
                    0.1,
                ));
                per_t.push(fit);
            }
        }

        let balls = BallSystem::new(&s);
        let drawn = random_graph_functions(&mut rng, &s, cfg.functions);
        let fs: Vec<Vec<f64>> = drawn.iter().map(|d| d.1.clone()).collect();
        let maximal = verify_maximal_bound(&s, &balls, &heat, &fs, SplitParams::default())?;
        for (i, r) in maximal.rows.iter().enumerate() {
            ratios.push(i as f64, r.ratio, &s.label);
        }
        constants.push(maximal.fitted_c);
        within.push((tag.clone(), maximal.spread));
        let identity = DMatrix::identity(n, n);
        for f in &fs {
            vanish = vanish.max(maximal_mfl(&balls, &identity, f).iter().fold(0.0, |m, v| m.max(v.abs())));
        }

        let ws: Vec<GraphWeight> =
            [0.0, 0.5, 1.0, 1.5].iter().map(|&e| GraphWeight::degree_power(&s, e)).collect::<Result<_>>()?;
        let weighted = weighted_spectral_experiment(&s, &balls, &SymbolFunction::new("x e^-x", |x| x * (-x).exp()), &ws, cfg.p, 1.0, &fs)?;
        for r in &weighted.rows {
            scatter.push(r.characteristic, r.ratio, &format!("{} {}", s.label, r.weight));
        }

        let (mut edges, mut measure) = (Vec::new(), Vec::new());
        s.write_edges_csv(&mut edges)?;
        s.write_measure_csv(&mut measure)?;
        let stem = format!("graph_{tag}");
        rep.attachments.push((format!("{stem}_edges.csv"), String::from_utf8_lossy(&edges).into_owned()));
        rep.attachments.push((format!("{stem}_measure.csv"), String::from_utf8_lossy(&measure).into_owned()));
        spaces.push(json!({
            "label": s.label,
            "points": n,
            "measure": "degree",
            "doubling": s.doubling,
            "gaussian_fit_late": late,
            "gaussian_fit_per_t": per_t,
            "maximal": maximal,
            "weighted": weighted,
            "test_functions": drawn.iter().map(|d| &d.0).collect::<Vec<_>>(),
        }));
    }
    rep.checks.push(Check::at_most("heat_semigroup_preserves_constants", "e^{−tL}1 = 1", row_sum, 1e-12));
    rep.checks.push(Check::at_most("heat_semigroup_law", "spectral multipliers F(L) by the spectral resolution", semigroup, 1e-10));
    rep.checks.push(Check::at_most("functional_calculus_homomorphism", "spectral multipliers F(L) by the spectral resolution", homomorphism, 1e-10));
    rep.checks.push(Check::at_most("fitted_root_consistency", "F(L^{1/m}) with the fitted Gaussian exponent m", root, 1e-10));
    rep.checks.push(Check::at_most("identity_multiplier_maximal_vanishes", "We first want show that (F ≡ 1)", vanish, 0.0));
    for (label, spread) in within {
        rep.checks.push(Check::at_most(&format!("maximal_constant_spread_{label}"), "We first want show that", spread, 2.0));
    }
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().copied().fold(0.0, f64::max);
    rep.checks.push(Check::at_most("maximal_constant_cross_space_spread", "We first want show that", hi / lo, 2.0));
    rep.inputs = json!({ "symbol": heat.label, "split": SplitParams::default(), "spaces": spaces });
    rep.plots.push(fit_plot);
    rep.plots.push(ratios);
    rep.plots.push(scatter);
    Ok(rep)
}
