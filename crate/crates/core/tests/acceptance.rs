//! Acceptance criteria 1–16, one PASS/FAIL line each.
//!
//! Criteria 1–15 read named checks from the seeded suite reports; criterion 16 reruns every
//! suite on a differently sized thread pool and compares the serialised reports byte for byte.

use std::f64::consts::PI;

use hh_core::report::Report;
use hh_core::suite::{run, Command, ExperimentConfig};

struct Runs {
    config: Vec<(Command, ExperimentConfig)>,
    reports: Vec<Report>,
}

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for (k, v) in pairs {
        c.set(k, v).unwrap();
    }
    c
}

fn runs() -> Runs {
    let config = vec![
        (Command::Identities, config(&[("suite", "all"), ("seed", "7")])),
        (Command::KernelDecay, config(&[("l", "0,1,2"), ("r-sweep", "2^-6:2^-2")])),
        (Command::SparseExp, config(&[("seed", "11"), ("n-range", "2,4,6")])),
        (Command::WeightedExp, config(&[("seed", "11")])),
        (Command::GraphExp, config(&[("seed", "5"), ("spaces", "path:128,grid2d:256")])),
    ];
    let reports = config.iter().flat_map(|(cmd, c)| run(*cmd, c).unwrap()).collect();
    Runs { config, reports }
}

impl Runs {
    fn report(&self, suite: &str) -> &Report {
        self.reports.iter().find(|r| r.suite == suite).unwrap_or_else(|| panic!("no report for {suite}"))
    }

    /// `(pass, detail)` over the named checks of one suite.
    fn checks(&self, suite: &str, names: &[&str]) -> (bool, String) {
        let rep = self.report(suite);
        let mut pass = true;
        let mut detail = Vec::new();
        for name in names {
            match rep.check(name) {
                Some(c) => {
                    pass &= c.pass;
                    let v = c.value.map_or("non-finite".into(), |v| format!("{v:.3e}"));
                    detail.push(format!("{name}={v} (tol {:.1e})", c.tolerance));
                }
                None => {
                    pass = false;
                    detail.push(format!("{name} missing"));
                }
            }
        }
        (pass, detail.join(", "))
    }

    fn prefixed(&self, suite: &str, prefix: &str) -> Vec<String> {
        self.report(suite).checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.name.clone()).collect()
    }
}

#[test]
fn acceptance_criteria() {
    let r = runs();
    let mut lines: Vec<(usize, bool, String)> = Vec::new();
    let mut add = |k: usize, (pass, detail): (bool, String)| lines.push((k, pass, detail));

    add(1, r.checks("plancherel", &["weyl_plancherel_relative_error", "group_plancherel_relative_error"]));
    add(2, r.checks("ladder", &["ladder_identities_residual"]));
    add(3, r.checks("coefficients", &["delta_coefficient_rule", "delta_bar_coefficient_rule", "theta_coefficient_rule"]));
    {
        let (pass, detail) = r.checks("derivations", &["theta_transform_deviation", "theta_constant_spread"]);
        let d = r.report("derivations");
        let to_one = d.check("theta_constant_vs_one").and_then(|c| c.value).unwrap_or(f64::NAN);
        let to_root = d.check("theta_constant_vs_sqrt_two_pi").and_then(|c| c.value).unwrap_or(f64::NAN);
        add(4, (pass, format!("{detail}; |c − 1| = {to_one:.2e}, |c − (2π)^(1/2)| = {to_root:.3} (2π)^(1/2) = {:.4}", (2.0 * PI).sqrt())));
    }
    {
        let (pass, detail) = r.checks("gamma", &["gamma_eigenvalue_relative", "gamma_eigenvalue_dyadic_exact"]);
        let abs = r.report("gamma").inputs["absolute_max"].as_f64().unwrap_or(f64::NAN);
        add(5, (pass, format!("{detail}; relative to (2k+n), absolute max {abs:.2e}")));
    }
    add(6, r.checks("corollary", &["spectral_derivative_residual", "spectral_derivative_step_halving"]));
    add(7, r.checks("kernel-decay", &["moment_slope_l0_none", "moment_slope_l1_none", "moment_slope_l2_none"]));
    {
        let names = r.prefixed("envelope", "envelope_decay_");
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let (pass, detail) = r.checks("envelope", &names);
        add(8, (pass && names.len() >= 4, detail));
    }
    add(
        9,
        r.checks("approximate-identity", &["phi_unit_integral", "phi_dilation", "phi_commute", "phi_symmetry", "psi_telescoping"]),
    );
    add(10, r.checks("sparse", &["cube_coverage_defect", "cube_nesting", "cube_unique_ancestor", "cube_ball_sandwich"]));
    add(11, r.checks("sparse", &["sparse_invariants", "sparse_first_generation_fraction"]));
    add(12, r.checks("sparse", &["sparse_domination_degradation"]));
    add(13, r.checks("sparse", &["weak_type_constant_spread"]));
    add(14, r.checks("weighted", &["ap_unit_weight", "ap_nonincreasing_in_p"]));
    add(
        15,
        r.checks(
            "graph",
            &[
                "heat_semigroup_preserves_constants",
                "functional_calculus_homomorphism",
                "maximal_constant_cross_space_spread",
                "identity_multiplier_maximal_vanishes",
            ],
        ),
    );

    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let again: Vec<Report> = pool.install(|| r.config.iter().flat_map(|(cmd, c)| run(*cmd, c).unwrap()).collect());
    let mut differing = Vec::new();
    for (a, b) in r.reports.iter().zip(&again) {
        if a.to_json().unwrap() != b.to_json().unwrap() || a.attachments != b.attachments {
            differing.push(a.suite.clone());
        }
    }
    let same_count = again.len() == r.reports.len();
    add(
        16,
        (
            differing.is_empty() && same_count,
            format!("{} reports rerun on 3 threads; differing: {differing:?}", r.reports.len()),
        ),
    );

    for (k, pass, detail) in &lines {
        println!("criterion {k:>2}: {} {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
