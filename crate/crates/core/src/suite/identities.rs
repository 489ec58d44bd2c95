use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use super::ExperimentConfig;
use crate::derivations::{delta, delta_bar, theta_from_parts, verify_lemma_2_2_k1, verify_theorem_4_2, ThetaForm};
use crate::error::{Error, Result};
use crate::geometry::{GridFunction, TGrid, ZGrid, ZSamples};
use crate::heat::{
    approximate_identity_report, b_function, commutativity_defect, gamma_operator, lemma_4_4_envelope, telescoping_defect,
    verify_corollary_4_3, weighted_l1_moment, KernelGrid,
};
use crate::hermite::{OperatorMatrix, TruncatedBasis};
use crate::multiplier::{
    delta_bar_on_v_expansion, delta_on_v_expansion, random_v_expansion, theta_on_v_expansion, HermiteSymbol, VExpansion,
    V_EXPANSION_THETA_FORM,
};
use crate::report::{Check, Plot, Report};
use crate::weyl::{
    group_fourier, ladder_identities, plancherel_mass, weyl_transform, FnFamily, LambdaGrid, SmoothFamily, WavePacket, ZPacket,
};
use crate::HPoint;

pub const IDENTITY_SUITES: [&str; 9] =
    ["plancherel", "ladder", "coefficients", "derivations", "gamma", "corollary", "approximate-identity", "envelope", "all"];

pub(super) fn randomized(suite: &str) -> bool {
    matches!(suite, "plancherel" | "ladder" | "coefficients" | "derivations" | "all")
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Vec<Report>> {
    let names: Vec<&str> = if cfg.suite == "all" { IDENTITY_SUITES[..8].to_vec() } else { vec![cfg.suite.as_str()] };
    names.into_iter().map(|s| run_one(s, cfg)).collect()
}

fn run_one(suite: &str, cfg: &ExperimentConfig) -> Result<Report> {
    let needs_n1 = matches!(suite, "plancherel" | "ladder" | "derivations" | "approximate-identity");
    if needs_n1 && cfg.n != 1 {
        return Err(Error::Usage(format!("n: suite {suite} runs its quadrature at n = 1 only, got n = {}", cfg.n)));
    }
    match suite {
        "plancherel" => plancherel(cfg),
        "ladder" => ladder(cfg),
        "coefficients" => coefficients(cfg),
        "derivations" => derivations(cfg),
        "gamma" => gamma(cfg),
        "corollary" => corollary(cfg),
        "approximate-identity" => approximate_identity(cfg),
        "envelope" => envelope(cfg),
        _ => Err(Error::Usage(format!("suite: unknown suite '{suite}'"))),
    }
}

fn basis(cfg: &ExperimentConfig) -> Arc<TruncatedBasis> {
    Arc::new(TruncatedBasis::new(cfg.n, cfg.truncation))
}

fn zgrid(cfg: &ExperimentConfig) -> Result<Arc<ZGrid>> {
    let g = cfg.grid_or(&[8.0, 121.0])?;
    Ok(Arc::new(ZGrid::new(cfg.n, g[0], g[1] as usize)?))
}

fn positive_grid(cfg: &ExperimentConfig) -> Result<LambdaGrid> {
    let (lo, hi, ratio) = cfg.lambda_grid;
    LambdaGrid::positive_log(lo, hi, ratio)
}

fn plancherel(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("plancherel");
    let mut rng = cfg.rng();
    let g = zgrid(cfg)?;
    let b = basis(cfg);
    let mut single = 0.0f64;
    let mut zpackets = Vec::new();
    let mut plot = Plot::new("weyl_plancherel", "lambda", "relative error");
    for i in 0..cfg.functions {
        let p = ZPacket::random(&mut rng, 1, 0.4);
        let lam = 4.0 * p.width;
        let s = ZSamples::from_fn(&g, |z| p.eval(z));
        let w = weyl_transform(&s, lam, &b)?.value;
        let lhs = p.l2_norm_sqr();
        let rhs = lam / (2.0 * PI) * w.hs_norm().powi(2);
        let err = (lhs - rhs).abs() / lhs;
        plot.push(lam, err, &format!("packet {i}"));
        single = single.max(err);
        zpackets.push(p);
    }
    rep.checks.push(Check::at_most("weyl_plancherel_relative_error", "Plancherel theorem for the Weyl transform at one λ", single, 1e-4));

    let z = Arc::new(ZGrid::new(1, 7.0, 71)?);
    let t = TGrid::power_of_two(24.0, 7)?;
    let grid = LambdaGrid::signed_log(0.125, 8.0, 1.05)?;
    let mut full = 0.0f64;
    let mut packets = Vec::new();
    for _ in 0..cfg.functions {
        let p = WavePacket::random(&mut rng, 1);
        let f = GridFunction::from_fn(&z, t, &|q: &HPoint| p.eval(q));
        let fhat = group_fourier(&f, &grid, &b)?.value;
        let exact = p.l2_norm_sqr();
        full = full.max((plancherel_mass(&fhat) - exact).abs() / exact);
        packets.push(p);
    }
    rep.checks.push(Check::at_most(
        "group_plancherel_relative_error",
        "the Plancherel theorem can be read as (group Fourier transform)",
        full,
        1e-3,
    ));
    rep.inputs = json!({ "z_packets": zpackets, "wave_packets": packets });
    rep.plots.push(plot);
    Ok(rep)
}

fn ladder(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("ladder");
    let mut rng = cfg.rng();
    let g = zgrid(cfg)?;
    let b = basis(cfg);
    let (mut corrected, mut printed) = (0.0f64, f64::INFINITY);
    let mut packets = Vec::new();
    let mut plot = Plot::new("ladder_residuals", "lambda", "corrected residual");
    for i in 0..cfg.functions {
        let p = ZPacket::random(&mut rng, 1, 0.3);
        for &lam in &[0.5, 1.0, 2.0] {
            let r = ladder_identities(&p, 0, lam, &g, &b)?;
            corrected = corrected.max(r.corrected_max());
            printed = printed.min(r.printed_max());
            plot.push(lam, r.corrected_max(), &format!("packet {i}"));
        }
        packets.push(p);
    }
    rep.checks.push(Check::at_most(
        "ladder_identities_residual",
        "Weyl transform intertwines the complex fields with the ladder operators (both parts)",
        corrected,
        1e-5,
    ));
    rep.checks.push(Check::at_least(
        "ladder_identities_printed_constants_rejected",
        "Weyl transform intertwines the complex fields with the ladder operators (printed constants)",
        printed,
        1e-3,
    ));
    rep.inputs = json!({ "z_packets": packets });
    rep.plots.push(plot);
    Ok(rep)
}

fn coefficient_defect(e: &VExpansion, lam: f64, b: &Arc<TruncatedBasis>) -> Result<[f64; 3]> {
    let n = b.dim();
    let m = e.to_matrix(lam, b)?;
    let (mut d, mut db) = (0.0f64, 0.0f64);
    for j in 0..n {
        let d1 = delta_on_v_expansion(e, j, lam)?.to_matrix(lam, b)?;
        d = d.max(d1.interior_max_diff(&delta(j, &m)?));
        let d2 = delta_bar_on_v_expansion(e, j, lam)?.to_matrix(lam, b)?;
        db = db.max(d2.interior_max_diff(&delta_bar(j, &m)?));
    }
    let derivative = VExpansion { terms: e.d_lambda.clone().unwrap_or_default(), d_lambda: None }.to_matrix(lam, b)?;
    let th = theta_from_parts(&m, &derivative, V_EXPANSION_THETA_FORM)?;
    let tc = theta_on_v_expansion(e, lam)?.to_matrix(lam, b)?;
    Ok([d, db, tc.with_band(th.band()).interior_max_diff(&th)])
}

fn coefficients(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("coefficients");
    let mut rng = cfg.rng();
    let b = Arc::new(TruncatedBasis::new(cfg.n, 10));
    let mut worst = [0.0f64; 3];
    let mut drawn = Vec::new();
    for terms in std::iter::repeat(1).take(20).chain(std::iter::repeat(4).take(5)) {
        let e = random_v_expansion(&mut rng, cfg.n, terms, true);
        let lam = rng.gen_range(0.5..2.0);
        let d = coefficient_defect(&e, lam, &b)?;
        for (w, v) in worst.iter_mut().zip(d) {
            *w = w.max(v);
        }
        drawn.push(json!({ "lambda": lam, "terms": e.terms.iter().map(|(k, v)| json!({"m": k.m, "alpha": k.alpha, "b": [v.re, v.im]})).collect::<Vec<_>>() }));
    }
    let anchor = "coefficient rules for δ_j, δ̄_j and Θ on partial-isometry expansions";
    rep.checks.push(Check::at_most("delta_coefficient_rule", anchor, worst[0], 1e-10));
    rep.checks.push(Check::at_most("delta_bar_coefficient_rule", anchor, worst[1], 1e-10));
    rep.checks.push(Check::at_most("theta_coefficient_rule", anchor, worst[2], 1e-10));
    rep.inputs = json!({ "expansions": drawn });
    Ok(rep)
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

const INTERIOR: [f64; 6] = [1.5, 1.75, 2.0, 2.25, 2.5, 2.75];

fn derivations(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("derivations");
    let mut rng = cfg.rng();
    let z = zgrid(cfg)?;
    let t = TGrid::power_of_two(24.0, 7)?;
    let b = basis(cfg);
    let (mut deviation, mut printed) = (0.0f64, f64::INFINITY);
    let mut constants = Vec::new();
    let mut packets = Vec::new();
    let mut plot = Plot::new("theta_constants", "lambda", "fitted c");
    for i in 0..cfg.functions {
        let mut p = WavePacket::random(&mut rng, 1);
        p.lambda_center = 2.0;
        let f = GridFunction::from_fn(&z, t, &|q: &HPoint| p.eval(q));
        let c = verify_theorem_4_2(&f, &INTERIOR, &b, ThetaForm::Consistent)?;
        deviation = deviation.max(if c.inconclusive { f64::INFINITY } else { c.deviation });
        for &(l, k) in &c.per_lambda {
            plot.push(l, k.re, &format!("packet {i}"));
            constants.push(k);
        }
        printed = printed.min(verify_theorem_4_2(&f, &INTERIOR, &b, ThetaForm::Printed)?.deviation);
        packets.push(p);
    }
    let mean: Complex64 = constants.iter().sum::<Complex64>() / constants.len() as f64;
    let spread = constants.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max) / mean.norm();
    let anchor = "multiplication by it corresponds to Θ on the Fourier side";
    rep.checks.push(Check::at_most("theta_transform_deviation", anchor, deviation, 1e-3));
    rep.checks.push(Check::at_most("theta_constant_spread", anchor, spread, 1e-2));
    rep.checks.push(Check::at_most("theta_constant_vs_one", anchor, (mean - 1.0).norm(), 1e-3));
    rep.checks.push(Check::at_least("theta_constant_vs_sqrt_two_pi", anchor, (mean - (2.0 * PI).sqrt()).norm(), 0.1));
    rep.checks.push(Check::at_least("theta_printed_form_rejected", anchor, printed, 1e-2));

    let h = ZPacket::random(&mut rng, 1, 0.4);
    let hs = ZSamples::from_fn(&z, |q| h.eval(q));
    let fam = heat_family();
    let (mut consistent, mut ratio_dev) = (0.0f64, 0.0f64);
    for &lam in &[1.0, 2.0] {
        consistent = consistent.max(verify_lemma_2_2_k1(&fam, &hs, lam, 1e-3, &b)?.consistent);
        let coarse = verify_lemma_2_2_k1(&fam, &hs, lam, 0.2, &b)?.consistent;
        let fine = verify_lemma_2_2_k1(&fam, &hs, lam, 0.1, &b)?.consistent;
        ratio_dev = ratio_dev.max((coarse / fine - 4.0).abs());
    }
    let anchor = "λ-derivative of T_{m(λ)} acting on h";
    rep.checks.push(Check::at_most("lambda_derivative_identity", anchor, consistent, 1e-4));
    rep.checks.push(Check::at_most("lambda_derivative_step_halving", anchor, ratio_dev, 0.5));
    rep.inputs = json!({ "wave_packets": packets, "derivative_test_function": h, "interior_lambdas": INTERIOR });
    rep.plots.push(plot);
    Ok(rep)
}

fn gamma(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("gamma");
    let n = cfg.n;
    let sym = HermiteSymbol::eigenvalue(n);
    let grid = positive_grid(cfg)?;
    let (mut relative, mut absolute, mut dyadic) = (0.0f64, 0.0f64, 0.0f64);
    let mut plot = Plot::new("gamma_eigenvalue", "k", "max |Γ| over λ");
    for k in 0..=20 {
        let mut row = 0.0f64;
        for &l in &grid.nodes {
            let g = gamma_operator(&sym, n, k, l)?.norm();
            row = row.max(g);
            relative = relative.max(g / (2 * k + n) as f64);
        }
        absolute = absolute.max(row);
        plot.push(k as f64, row, "grid");
        for j in -3..=3 {
            dyadic = dyadic.max(gamma_operator(&sym, n, k, 2f64.powi(j))?.norm());
        }
    }
    let anchor = "Γ_λ^k((2k+n)λ) vanishes";
    rep.checks.push(Check::at_most("gamma_eigenvalue_relative", anchor, relative, 1e-14));
    rep.checks.push(Check::at_most("gamma_eigenvalue_dyadic_exact", anchor, dyadic, 0.0));
    rep.inputs = json!({ "k_max": 20, "lambda_nodes": grid.nodes.len(), "absolute_max": absolute });
    rep.plots.push(plot);
    Ok(rep)
}

fn corollary(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("corollary");
    let b = |x: f64| b_function(1.0, x, 0);
    let db = |x: f64| b_function(1.0, x, 1);
    let s2 = [0.0, 0.3, 1.0, 2.5, 6.0];
    let coarse = verify_corollary_4_3(&b, &db, cfg.n, 1.0, 1e-3, &s2, 80)?;
    let fine = verify_corollary_4_3(&b, &db, cfg.n, 1.0, 5e-4, &s2, 80)?;
    let anchor = "λ-derivative of b(L_λ) as a spectral series";
    rep.checks.push(Check::at_most("spectral_derivative_residual", anchor, coarse.residual, 1e-5));
    rep.checks.push(Check::within("spectral_derivative_step_halving", anchor, coarse.residual / fine.residual, 3.5, 4.5));
    rep.inputs = json!({ "b": "e^{-x} - e^{-2x}", "lambda": 1.0, "z_norm_sqr": s2, "steps": [1e-3, 5e-4] });
    Ok(rep)
}

fn sample_points() -> Vec<HPoint> {
    (0..20)
        .map(|i| {
            let a = i as f64 * 0.37;
            HPoint::new(vec![Complex64::new(0.3 * a.sin(), 0.25 * (1.3 * a).cos())], 0.2 * (0.7 * a).sin())
        })
        .collect()
}

fn approximate_identity(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("approximate-identity");
    let pts = sample_points();
    let g = Arc::new(ZGrid::new(1, 4.0, 81)?);
    let a = approximate_identity_report(0.25, &g, TGrid::power_of_two(6.0, 8)?, &pts)?;
    let anchor = "For each r > 0, let φ_r";
    rep.checks.push(Check::at_most("phi_unit_integral", anchor, a.integral_defect, 1e-3));
    rep.checks.push(Check::at_most("phi_dilation", anchor, a.scaling_defect, 1e-3));
    rep.checks.push(Check::at_least("phi_quarter_power_dilation_rejected", anchor, a.quarter_power_scaling_defect, 1e-2));
    rep.checks.push(Check::at_most("phi_symmetry", anchor, a.symmetry_defect, 1e-10));
    let zg = ZGrid::new(1, 6.0, 121)?;
    let zs: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.3, -0.2)], vec![Complex64::new(-0.5, 0.7)]];
    rep.checks.push(Check::at_most("phi_commute", anchor, commutativity_defect(0.3, 0.5, &[0.5, 2.0], &zg, &zs)?, 1e-6));
    rep.checks.push(Check::at_most("psi_telescoping", "Let t_j = 2^{−j}", telescoping_defect(5, &pts[..5])?, 1e-10));
    let mut plot = Plot::new("weighted_l1", "r", "∫|φ_r|(1+ρ/r)^η");
    let mut worst = 0.0f64;
    for k in 1..=6 {
        let r = 2f64.powi(-k);
        let v = weighted_l1_moment(r, 0.5, r, &KernelGrid::for_r_range(1, r, r)?)?;
        plot.push(r, v, "eta=0.5");
        worst = worst.max(v);
    }
    rep.checks.push(Check::at_most("phi_weighted_l1_bounded", anchor, worst, 10.0));
    rep.inputs = json!({ "r": 0.25, "sample_points": pts.len() });
    rep.plots.push(plot);
    Ok(rep)
}

fn envelope(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("envelope");
    let b = basis(cfg);
    let grid = positive_grid(cfg)?;
    let n = cfg.n;
    let unit = |i: usize| (0..n).map(|j| usize::from(j == 0) * i).collect::<Vec<usize>>();
    let cases = [(unit(0), unit(0), 0usize), (unit(1), unit(0), 0), (unit(0), unit(1), 0), (unit(0), unit(0), 1), (unit(2), unit(0), 0)];
    let mut plot = Plot::new("envelope", "N", "opnorm");
    for (alpha, beta, l) in cases {
        let r = lemma_4_4_envelope(&alpha, &beta, l, 0.5, 0..=7, &grid, &b)?;
        let label = format!("a{}b{}l{}", alpha[0], beta[0], l);
        for lv in &r.levels {
            plot.push(lv.level as f64, lv.opnorm, &label);
        }
        let worst = r.decay_ratios.iter().map(|d| d.1).fold(0.0, f64::max) / r.ratio_bound;
        let enough = r.decay_ratios.len() >= 3;
        rep.checks.push(Check::with(
            &format!("envelope_decay_{label}"),
            "dyadic decay of χ_N δ^α δ̄^β Γ^l(ψ_r)",
            worst,
            1.0,
            r.pass && enough && worst <= 1.0,
        ));
    }
    rep.plots.push(plot);
    Ok(rep)
}
