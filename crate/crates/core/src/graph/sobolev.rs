use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::calculus::SymbolFunction;
use crate::dyadic::quintic_bump;
use crate::error::{Error, Result};

/// Smooth bump `η` on `[a, b] ⊂ (0, ∞)`: `exp(1 − 1/(1 − u²))` with `u` the affine image in `(−1, 1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cutoff {
    pub a: f64,
    pub b: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { a: 0.5, b: 2.0 }
    }
}

impl Cutoff {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff support must satisfy 0 < a < b, got [{a}, {b}]")));
        }
        Ok(Cutoff { a, b })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (2.0 * x - self.a - self.b) / (self.b - self.a);
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    }
}

/// `‖(1 + ξ²)^{s/2} ĝ‖` pulled back to `L^q`, plus the share of spectral energy in the top half
/// of the resolved band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevNorm {
    pub value: f64,
    pub tail_fraction: f64,
}

impl SobolevNorm {
    /// False when the symbol oscillates faster than the grid resolves.
    pub fn resolved(&self) -> bool {
        self.tail_fraction <= 1e-8
    }
}

const POINTS: usize = 4096;

/// `‖η·δ_tF‖_{W_s^q}` with the Bessel potential `(1 − d²/dx²)^{s/2}` applied spectrally on a
/// periodic grid three times the width of `supp η`; `q = ∞` is allowed.
pub fn sobolev_norm(f: &SymbolFunction, t: f64, s: f64, q: f64, eta: &Cutoff) -> Result<SobolevNorm> {
    if !(t > 0.0) || !(s >= 0.0) || !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("need t > 0, s ≥ 0, q ≥ 1; got t = {t}, s = {s}, q = {q}")));
    }
    let width = eta.b - eta.a;
    let (lo, period) = (eta.a - width, 3.0 * width);
    let h = period / POINTS as f64;
    let mut buf: Vec<Complex64> = (0..POINTS)
        .map(|k| {
            let x = lo + k as f64 * h;
            Complex64::new(eta.eval(x) * f.eval(t * x), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(POINTS).process(&mut buf);
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let mut tail = 0.0;
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k <= POINTS / 2 { k as f64 } else { k as f64 - POINTS as f64 };
        if kk.abs() > POINTS as f64 / 4.0 {
            tail += c.norm_sqr();
        }
        let xi = 2.0 * PI * kk / period;
        *c *= (1.0 + xi * xi).powf(s / 2.0) / POINTS as f64;
    }
    planner.plan_fft_inverse(POINTS).process(&mut buf);
    let value = if q.is_infinite() {
        buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    } else {
        (buf.iter().map(|c| c.re.abs().powf(q)).sum::<f64>() * h).powf(1.0 / q)
    };
    Ok(SobolevNorm { value, tail_fraction: if total > 0.0 { tail / total } else { 0.0 } })
}

/// `sup_t ‖η δ_tF‖_{W_s^q} + |F(0)|` with the supremum over `t = 2^k`, `k ∈ k_range`.
pub fn multiplier_norm(f: &SymbolFunction, s: f64, q: f64, eta: &Cutoff, k_range: std::ops::RangeInclusive<i32>) -> Result<f64> {
    let mut sup = 0.0f64;
    for k in k_range {
        sup = sup.max(sobolev_norm(f, 2f64.powi(k), s, q, eta)?.value);
    }
    Ok(sup + f.at_zero().abs())
}

/// `φ(λ) = ψ(λ) − ψ(2λ)` with the quintic cutoff `ψ`; supported in `[¼, 1]`.
pub fn partition_profile(lambda: f64) -> f64 {
    quintic_bump(lambda) - quintic_bump(2.0 * lambda)
}

/// `φ_l(λ) = φ(2^{−l}λ)`.
pub fn partition_piece(l: i32, lambda: f64) -> f64 {
    partition_profile(lambda * 2f64.powi(-l))
}

/// `Σ_{l=lo}^{hi} φ_l(λ)`, equal to 1 when `2^{lo−1} ≤ λ ≤ 2^{hi−1}`.
pub fn partition_sum(lambda: f64, lo: i32, hi: i32) -> f64 {
    (lo..=hi).map(|l| partition_piece(l, lambda)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        let e = Cutoff::default();
        assert_eq!(e.eval(1.25), 1.0);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.0), 0.0);
        assert!(Cutoff::new(0.0, 1.0).is_err());
    }

    #[test]
    fn partition_support() {
        assert_eq!(partition_profile(0.2), 0.0);
        assert_eq!(partition_profile(1.2), 0.0);
        assert!(partition_profile(0.5) > 0.0);
    }
}
