use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heat::laguerre::laguerre_eval;
use crate::hermite::{gauss_hermite, hermite_functions, CMatrix, OperatorMatrix, TruncatedBasis};

/// Coherent-state parameter of `π_λ(z)` in coordinate `j`:
/// `β = √(|λ|/2)(−y + i·sgn(λ)·x)`.
pub fn displacement_parameter(lambda: f64, z: Complex64) -> Complex64 {
    let s = (lambda.abs() / 2.0).sqrt();
    Complex64::new(-s * z.im, s * lambda.signum() * z.re)
}

/// `⟨m|D(β)|n⟩` for `m, n ≤ k`, where `D(β) = exp(βa* − β̄a)`.
///
/// Uses the ladder relation `√(m+1)⟨m+1|D|n⟩ = √n⟨m|D|n−1⟩ + β⟨m|D|n⟩`
/// seeded by the coherent-state column and row.
pub fn displacement_1d(beta: Complex64, k: usize) -> DMatrix<Complex64> {
    let d = k + 1;
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    let g = (-beta.norm_sqr() / 2.0).exp();
    let mb = -beta.conj();
    let mut col = Complex64::new(g, 0.0);
    let mut row = col;
    m[(0, 0)] = col;
    for j in 1..d {
        let s = (j as f64).sqrt();
        col = col * beta / s;
        row = row * mb / s;
        m[(j, 0)] = col;
        m[(0, j)] = row;
    }
    let sq: Vec<f64> = (0..=d).map(|j| (j as f64).sqrt()).collect();
    for r in 0..d - 1 {
        for c in 1..d {
            m[(r + 1, c)] = (m[(r, c - 1)] * sq[c] + m[(r, c)] * beta) / sq[r + 1];
        }
    }
    m
}

/// Closed form `√(n!/m!) β^{m−n} e^{−|β|²/2} L_n^{(m−n)}(|β|²)` (and its mirror for `m < n`).
pub fn displacement_entry_closed_form(beta: Complex64, m: usize, n: usize) -> Complex64 {
    let x = beta.norm_sqr();
    let (lo, hi, base) = if m >= n { (n, m, beta) } else { (m, n, -beta.conj()) };
    let d = hi - lo;
    let log_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let lpre = 0.5 * (log_fact(lo) - log_fact(hi)) - x / 2.0;
    let pow = if d == 0 { Complex64::new(1.0, 0.0) } else { base.powu(d as u32) };
    pow * lpre.exp() * laguerre_eval(lo, d as f64, x)
}

pub(crate) fn tensor_from_1d(basis: &TruncatedBasis, factors: &[DMatrix<Complex64>]) -> CMatrix {
    let d = basis.len();
    if factors.len() == 1 {
        return factors[0].clone();
    }
    CMatrix::from_fn(d, d, |r, c| {
        let nu = basis.index(r);
        let mu = basis.index(c);
        factors.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (j, f)| acc * f[(nu[j], mu[j])])
    })
}

/// Matrix of `π_λ(z)` (at `t = 0`) in the scaled Hermite basis; entry `(ν, μ)` is `⟨Φ_ν, π_λ(z)Φ_μ⟩`.
pub fn rep_matrix(lambda: f64, z: &[Complex64], basis: &Arc<TruncatedBasis>) -> Result<OperatorMatrix> {
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    if z.len() != basis.dim() {
        return Err(Error::InvalidArgument(format!("point has {} coordinates, basis has {}", z.len(), basis.dim())));
    }
    let factors: Vec<_> = z.iter().map(|&w| displacement_1d(displacement_parameter(lambda, w), basis.cutoff())).collect();
    Ok(OperatorMatrix::from_parts(basis.clone(), lambda, tensor_from_1d(basis, &factors), 0))
}

/// Largest `√|λ|·|z_j|` the Gauss–Hermite rule of the given order resolves.
pub fn quadrature_capture_radius(order: usize) -> f64 {
    (order as f64).sqrt() / 2.0
}

/// `π_λ(z)` by Gauss–Hermite quadrature of `∫ Φ_ν(ξ) e^{iλ(xξ+½xy)} Φ_μ(ξ+y) dξ`,
/// order `2K + 16` per coordinate.
pub fn rep_matrix_quadrature(lambda: f64, z: &[Complex64], basis: &Arc<TruncatedBasis>) -> Result<OperatorMatrix> {
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    let k = basis.cutoff();
    let order = 2 * k + 16;
    let cap = quadrature_capture_radius(order);
    let s = lambda.abs();
    for w in z {
        let r = s.sqrt() * w.norm();
        if r > cap {
            return Err(Error::QuadratureDegenerate { radius: w.norm(), capture: cap / s.sqrt() });
        }
    }
    let (nodes, weights) = gauss_hermite(order);
    let factors: Vec<DMatrix<Complex64>> = z
        .iter()
        .map(|w| {
            let (x, y) = (w.re, w.im);
            // ξ = −y/2 + u/√s turns the Gaussian envelope into e^{−u²}·e^{−s y²/4}
            let mut f = DMatrix::<Complex64>::zeros(k + 1, k + 1);
            for (&u, &wt) in nodes.iter().zip(&weights) {
                let xi = -y / 2.0 + u / s.sqrt();
                let a = hermite_functions(k, s.sqrt() * xi);
                let b = hermite_functions(k, s.sqrt() * (xi + y));
                let phase = Complex64::from_polar(1.0, lambda * (x * xi + 0.5 * x * y));
                let env = wt * (u * u).exp();
                for nu in 0..=k {
                    for mu in 0..=k {
                        f[(nu, mu)] += phase * (env * a[nu] * b[mu]);
                    }
                }
            }
            f
        })
        .collect();
    Ok(OperatorMatrix::from_parts(basis.clone(), lambda, tensor_from_1d(basis, &factors), 0))
}

/// `Φ_{α,β}^λ(z) = (2π)^{−n/2} ⟨Φ_β, π_λ(z)Φ_α⟩`.
pub fn special_hermite(alpha: &[usize], beta: &[usize], lambda: f64, z: &[Complex64]) -> Result<Complex64> {
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    if alpha.len() != z.len() || beta.len() != z.len() {
        return Err(Error::InvalidArgument("index and point dimensions differ".into()));
    }
    let n = z.len() as f64;
    let v = z.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (j, &w)| {
        acc * displacement_entry_closed_form(displacement_parameter(lambda, w), beta[j], alpha[j])
    });
    Ok(v * (2.0 * std::f64::consts::PI).powf(-n / 2.0))
}
