use serde_json::json;

use super::{field_name, ExperimentConfig};
use crate::error::Result;
use crate::geometry::VectorField;
use crate::heat::{fit_log_slope, KernelGrid, KernelKind, RadialMultiplier, RadialTable};
use crate::report::{Check, Plot, Report};

/// `2l − 2` for `ψ_r` itself, one less per horizontal field and two less for `T`.
fn expected_slope(l: usize, field: Option<VectorField>) -> f64 {
    let base = 2.0 * l as f64 - 2.0;
    match field {
        None => base,
        Some(VectorField::T) => base - 2.0,
        Some(_) => base - 1.0,
    }
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = cfg.report("kernel-decay");
    let rs = &cfg.r_sweep;
    let grid = KernelGrid::for_r_range(cfg.n, rs[0], rs[rs.len() - 1])?;
    let tables: Vec<RadialTable> =
        rs.iter().map(|&r| RadialTable::build(&RadialMultiplier::Identity, KernelKind::Psi, r, &grid)).collect::<Result<_>>()?;
    let mut raw = Plot::new("moments", "r", "moment");
    let mut log = Plot::new("loglog", "log r", "log moment");
    let mut rows = Vec::new();
    let field = field_name(cfg.field);
    for &l in &cfg.orders {
        let y: Vec<f64> = tables
            .iter()
            .map(|t| match cfg.field {
                None => t.moment(l as f64),
                Some(f) => t.gradient_moment(l as f64, f),
            })
            .collect();
        let series = format!("l={l}");
        for (&r, &m) in rs.iter().zip(&y) {
            raw.push(r, m, &series);
            log.push(r.ln(), m.ln(), &series);
        }
        let fit = fit_log_slope(rs, &y, true)?;
        let want = expected_slope(l, cfg.field);
        rep.checks.push(Check::at_most(
            &format!("moment_slope_l{l}_{field}"),
            "moment scaling of the ψ_r kernels of T_M",
            (fit.slope - want).abs(),
            0.3,
        ));
        rows.push(json!({ "l": l, "field": field, "slope": fit.slope, "expected": want, "points_used": fit.points_used }));
    }
    rep.inputs = json!({ "multiplier": "identity", "kernel": "psi_r", "slopes": rows });
    rep.plots.push(raw);
    rep.plots.push(log);
    Ok(rep)
}
