use nalgebra::DVector;
use serde::Serialize;

use super::calculus::{spectral_multiplier, SymbolFunction};
use super::maximal::BallSystem;
use super::sobolev::{multiplier_norm, Cutoff};
use super::space::DiscreteSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct GraphWeight {
    pub label: String,
    pub values: Vec<f64>,
}

impl GraphWeight {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        Ok(GraphWeight { label: label.into(), values })
    }

    pub fn constant(space: &DiscreteSpace, c: f64) -> Result<Self> {
        Self::new(format!("const({c})"), vec![c; space.len()])
    }

    /// `deg(x)^ε` for the unit-conductance degree.
    pub fn degree_power(space: &DiscreteSpace, eps: f64) -> Result<Self> {
        let mut deg = vec![0.0; space.len()];
        for &(a, b, _) in &space.edges {
            deg[a] += 1.0;
            deg[b] += 1.0;
        }
        Self::new(format!("deg^{eps}"), deg.iter().map(|d: &f64| d.powf(eps)).collect())
    }

    /// `(1 + d(x, x₀))^ε`.
    pub fn distance_power(space: &DiscreteSpace, origin: usize, eps: f64) -> Result<Self> {
        Self::new(format!("(1+d)^{eps}"), (0..space.len()).map(|x| (1.0 + space.distance[(x, origin)]).powf(eps)).collect())
    }
}

/// `[w]_{A_p} = sup_B (avg_B w)(avg_B w^{−1/(p−1)})^{p−1}` over the balls, with `μ`-averages.
pub fn ball_ap_characteristic(space: &DiscreteSpace, balls: &BallSystem, w: &GraphWeight, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Unsupported(format!("A_p characteristic needs p > 1, got {p}")));
    }
    let mu = &space.measure;
    let dual = -1.0 / (p - 1.0);
    let mut best = 0.0f64;
    for b in &balls.balls {
        let mass: f64 = b.members.iter().map(|&i| mu[i]).sum();
        let a = b.members.iter().map(|&i| w.values[i] * mu[i]).sum::<f64>() / mass;
        let c = b.members.iter().map(|&i| w.values[i].powf(dual) * mu[i]).sum::<f64>() / mass;
        best = best.max(a * c.powf(p - 1.0));
    }
    Ok(best)
}

pub fn weighted_norm(space: &DiscreteSpace, f: &[f64], w: &[f64], p: f64) -> f64 {
    f.iter().zip(w).zip(&space.measure).map(|((v, w), m)| v.abs().powf(p) * w * m).sum::<f64>().powf(1.0 / p)
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphWeightedRow {
    pub weight: String,
    /// `[w]_{A_{p/2}}`.
    pub characteristic: f64,
    pub ratio: f64,
    /// `ratio / ([w]^{max(1, 1/(p−2))} · H)`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphWeightedReport {
    pub space: String,
    pub symbol: String,
    pub p: f64,
    pub s: f64,
    pub exponent: f64,
    /// `H = sup_t ‖η δ_tF‖_{W_s^∞} + |F(0)|`.
    pub hypothesis: f64,
    pub rows: Vec<GraphWeightedRow>,
    /// Envelope constant: the largest `scaled`.
    pub envelope: f64,
}

/// `‖F(L)f‖_{L^p(w)}/‖f‖_{L^p(w)}` (worst test function) against `[w]_{A_{p/2}}^{max(1,1/(p−2))}·H`.
pub fn weighted_spectral_experiment(
    space: &DiscreteSpace,
    balls: &BallSystem,
    symbol: &SymbolFunction,
    weights: &[GraphWeight],
    p: f64,
    s: f64,
    functions: &[Vec<f64>],
) -> Result<GraphWeightedReport> {
    if !(p > 2.0) {
        return Err(Error::Unsupported(format!("the weighted experiment needs p > 2, got {p}")));
    }
    if functions.is_empty() {
        return Err(Error::InvalidArgument("need at least one test function".into()));
    }
    let op = spectral_multiplier(space, symbol);
    let images: Vec<Vec<f64>> = functions.iter().map(|f| (&op * DVector::from_column_slice(f)).iter().copied().collect()).collect();
    let hypothesis = multiplier_norm(symbol, s, f64::INFINITY, &Cutoff::default(), -12..=12)?;
    let exponent = 1f64.max(1.0 / (p - 2.0));
    let mut rows = Vec::new();
    for w in weights {
        if w.values.len() != space.len() {
            return Err(Error::InvalidArgument(format!("weight {} is not sampled on the space", w.label)));
        }
        let characteristic = ball_ap_characteristic(space, balls, w, p / 2.0)?;
        let ratio = functions
            .iter()
            .zip(&images)
            .map(|(f, tf)| weighted_norm(space, tf, &w.values, p) / weighted_norm(space, f, &w.values, p))
            .fold(0.0, f64::max);
        rows.push(GraphWeightedRow {
            weight: w.label.clone(),
            characteristic,
            ratio,
            scaled: ratio / (characteristic.powf(exponent) * hypothesis),
        });
    }
    let envelope = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    Ok(GraphWeightedReport {
        space: space.label.clone(),
        symbol: symbol.label.clone(),
        p,
        s,
        exponent,
        hypothesis,
        rows,
        envelope,
    })
}
