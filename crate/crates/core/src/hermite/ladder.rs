use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::TruncatedBasis;
use super::operator::{CMatrix, OperatorMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    /// `A_j(λ) = ∂_j + |λ|ξ_j`, lowers `μ_j`.
    Annihilation,
    /// `A_j*(λ) = −∂_j + |λ|ξ_j`, raises `μ_j`.
    Creation,
}

fn check_coordinate(j: usize, basis: &TruncatedBasis) -> Result<()> {
    if j >= basis.dim() {
        return Err(Error::InvalidArgument(format!(
            "coordinate {j} out of range for dimension {}",
            basis.dim()
        )));
    }
    Ok(())
}

/// Matrix of `A_j(λ)` or `A_j*(λ)` (coordinate `j` is zero-based).
///
/// `A_j Φ_μ = (2μ_j|λ|)^{1/2} Φ_{μ−e_j}` and `A_j* Φ_μ = ((2μ_j+2)|λ|)^{1/2} Φ_{μ+e_j}`;
/// the image of the top layer under `A_j*` is dropped. Both carry band 1.
pub fn ladder_matrix(j: usize, lambda: f64, kind: Ladder, basis: &Arc<TruncatedBasis>) -> Result<OperatorMatrix> {
    check_coordinate(j, basis)?;
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    let s = lambda.abs();
    let d = basis.len();
    let mut m = CMatrix::zeros(d, d);
    for (col, mu) in basis.indices().enumerate() {
        let mut target = mu.to_vec();
        let coeff = match kind {
            Ladder::Annihilation => {
                if mu[j] == 0 {
                    continue;
                }
                target[j] -= 1;
                (2.0 * mu[j] as f64 * s).sqrt()
            }
            Ladder::Creation => {
                target[j] += 1;
                ((2.0 * mu[j] as f64 + 2.0) * s).sqrt()
            }
        };
        if let Some(row) = basis.position(&target) {
            m[(row, col)] = Complex64::new(coeff, 0.0);
        }
    }
    Ok(OperatorMatrix::from_parts(basis.clone(), lambda, m, 1))
}

/// `H(λ)`, diagonal with entries `(2|μ|+n)|λ|`.
pub fn hermite_operator(lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    let n = basis.dim() as f64;
    OperatorMatrix::diagonal(basis, lambda, |mu| {
        Complex64::new((2.0 * mu.iter().sum::<usize>() as f64 + n) * lambda.abs(), 0.0)
    })
}

/// `P_k(λ)`, the projection onto total degree `k`.
pub fn spectral_projection(k: usize, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    OperatorMatrix::diagonal(basis, lambda, |mu| {
        if mu.iter().sum::<usize>() == k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// All `(k, P_k(λ))` for `k ≤ K`.
pub fn spectral_projections(lambda: f64, basis: &Arc<TruncatedBasis>) -> Vec<(usize, OperatorMatrix)> {
    (0..=basis.cutoff()).map(|k| (k, spectral_projection(k, lambda, basis))).collect()
}

/// Whether degree `k` lies in the dyadic band `2^N ≤ (2k+n)|λ| < 2^{N+1}`.
pub fn in_dyadic_band(level: u32, k: usize, n: usize, lambda: f64) -> bool {
    let e = (2 * k + n) as f64 * lambda.abs();
    let lo = 2f64.powi(level as i32);
    lo <= e && e < 2.0 * lo
}

/// `χ_N(λ) = Σ P_k(λ)` over the degrees in the `N`-th dyadic band.
pub fn dyadic_projection(level: u32, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    let n = basis.dim();
    OperatorMatrix::diagonal(basis, lambda, |mu| {
        if in_dyadic_band(level, mu.iter().sum(), n, lambda) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Matrix of `Σ_j ξ_j ∂_{ξ_j}`.
///
/// Per coordinate `ξ∂ = (A² − A*²)/(4|λ|) − 1/2`, so the entries are
/// λ-independent: `½√(μ(μ−1))` at `μ−2`, `−½√((μ+1)(μ+2))` at `μ+2`, `−½` on the
/// diagonal. Band 2 covers the dropped `μ+2` images.
pub fn xi_grad_matrix(lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    let d = basis.len();
    let mut m = CMatrix::zeros(d, d);
    for (col, mu) in basis.indices().enumerate() {
        m[(col, col)] += Complex64::new(-0.5 * basis.dim() as f64, 0.0);
        for j in 0..basis.dim() {
            let mj = mu[j] as f64;
            if mu[j] >= 2 {
                let mut t = mu.to_vec();
                t[j] -= 2;
                let row = basis.position(&t).expect("lower index present");
                m[(row, col)] += Complex64::new(0.5 * (mj * (mj - 1.0)).sqrt(), 0.0);
            }
            let mut t = mu.to_vec();
            t[j] += 2;
            if let Some(row) = basis.position(&t) {
                m[(row, col)] += Complex64::new(-0.5 * ((mj + 1.0) * (mj + 2.0)).sqrt(), 0.0);
            }
        }
    }
    OperatorMatrix::from_parts(basis.clone(), lambda, m, 2)
}
