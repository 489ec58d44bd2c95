use serde::Serialize;

use super::cubes::CubeSystem;
use super::grid::BoxGrid;
use crate::error::{Error, Result};

/// Positive weight sampled on a [`BoxGrid`].
#[derive(Debug, Clone, Serialize)]
pub struct Weight {
    pub label: String,
    pub values: Vec<f64>,
}

impl Weight {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        Ok(Weight { label: label.into(), values })
    }

    pub fn constant(grid: &BoxGrid, c: f64) -> Result<Self> {
        Self::new(format!("const({c})"), vec![c; grid.len()])
    }

    /// `w = ρ^ε`.
    pub fn rho_power(grid: &BoxGrid, eps: f64) -> Result<Self> {
        Self::new(format!("rho^{eps}"), (0..grid.len()).map(|i| grid.rho(i).powf(eps)).collect())
    }
}

/// `[w]_{A_p} = sup_Q (avg_Q w)(avg_Q w^{−1/(p−1)})^{p−1}` over the cubes of the system.
pub fn ap_characteristic(w: &Weight, p: f64, cubes: &CubeSystem) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Unsupported(format!("A_p characteristic needs p > 1, got {p}")));
    }
    if w.values.len() != cubes.grid.len() {
        return Err(Error::InvalidArgument("weight is not sampled on the cube grid".into()));
    }
    let dual = -1.0 / (p - 1.0);
    let mut best = 0.0f64;
    for q in &cubes.cubes {
        let k = q.members.len() as f64;
        let a = q.members.iter().map(|&i| w.values[i]).sum::<f64>() / k;
        let b = q.members.iter().map(|&i| w.values[i].powf(dual)).sum::<f64>() / k;
        best = best.max(a * b.powf(p - 1.0));
    }
    Ok(best)
}
