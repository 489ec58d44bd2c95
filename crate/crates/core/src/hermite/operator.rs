use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::TruncatedBasis;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// An operator on `L²(ℝⁿ)` written in the scaled Hermite basis at a fixed `λ`.
///
/// Entry `(ν, μ)` is `⟨Φ_ν^λ, M Φ_μ^λ⟩`. `band` counts the top total-degree
/// layers whose entries are unreliable because a ladder factor pushed content
/// past the truncation; identity checks should use [`OperatorMatrix::interior`].
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    basis: Arc<TruncatedBasis>,
    lambda: f64,
    entries: CMatrix,
    band: usize,
}

impl OperatorMatrix {
    pub fn new(basis: Arc<TruncatedBasis>, lambda: f64, entries: CMatrix, band: usize) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite and nonzero, got {lambda}")));
        }
        let d = basis.len();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{} but the basis has {d} elements",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(OperatorMatrix { basis, lambda, entries, band })
    }

    pub(crate) fn from_parts(basis: Arc<TruncatedBasis>, lambda: f64, entries: CMatrix, band: usize) -> Self {
        debug_assert!(lambda != 0.0);
        debug_assert_eq!(entries.nrows(), basis.len());
        OperatorMatrix { basis, lambda, entries, band }
    }

    pub fn zeros(basis: &Arc<TruncatedBasis>, lambda: f64) -> Self {
        let d = basis.len();
        Self::from_parts(basis.clone(), lambda, CMatrix::zeros(d, d), 0)
    }

    pub fn identity(basis: &Arc<TruncatedBasis>, lambda: f64) -> Self {
        let d = basis.len();
        Self::from_parts(basis.clone(), lambda, CMatrix::identity(d, d), 0)
    }

    /// Diagonal operator with entry `f(μ)` at `μ`.
    pub fn diagonal(basis: &Arc<TruncatedBasis>, lambda: f64, f: impl Fn(&[usize]) -> Complex64) -> Self {
        let d = basis.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, mu) in basis.indices().enumerate() {
            m[(i, i)] = f(mu);
        }
        Self::from_parts(basis.clone(), lambda, m, 0)
    }

    pub fn basis(&self) -> &Arc<TruncatedBasis> {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn with_band(mut self, band: usize) -> Self {
        self.band = band;
        self
    }

    /// Entry `⟨Φ_ν, M Φ_μ⟩` addressed by multi-indices.
    pub fn entry(&self, nu: &[usize], mu: &[usize]) -> Option<Complex64> {
        Some(self.entries[(self.basis.position(nu)?, self.basis.position(mu)?)])
    }

    pub fn map_entries(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(self.basis.clone(), self.lambda, self.entries.map(f), self.band)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_entries(|z| z * c)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.basis.clone(), self.lambda, self.entries.adjoint(), self.band)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn hs_inner(&self, other: &OperatorMatrix) -> Complex64 {
        self.entries.iter().zip(other.entries.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn op_norm(&self) -> f64 {
        self.entries
            .clone()
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &b| a.max(b))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Positions outside the unreliable band.
    pub fn interior(&self) -> Vec<usize> {
        self.basis.interior(self.band)
    }

    /// The block on the interior positions.
    pub fn interior_block(&self) -> CMatrix {
        self.block(&self.interior())
    }

    pub fn block(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), idx.len(), |a, b| self.entries[(idx[a], idx[b])])
    }

    /// Largest entrywise difference on the positions interior to both operands.
    pub fn interior_max_diff(&self, other: &OperatorMatrix) -> f64 {
        let idx = self.basis.interior(self.band.max(other.band));
        let mut worst = 0.0f64;
        for &a in &idx {
            for &b in &idx {
                worst = worst.max((self.entries[(a, b)] - other.entries[(a, b)]).norm());
            }
        }
        worst
    }

    /// Relative HS mass carried by rows or columns of total degree above `K − width`.
    pub fn boundary_content(&self, width: usize) -> f64 {
        let total = self.hs_norm();
        if total == 0.0 {
            return 0.0;
        }
        let top = self.basis.cutoff().saturating_sub(width);
        let mut outer = 0.0;
        for a in 0..self.basis.len() {
            for b in 0..self.basis.len() {
                if self.basis.degree(a) > top || self.basis.degree(b) > top {
                    outer += self.entries[(a, b)].norm_sqr();
                }
            }
        }
        outer.sqrt() / total
    }

    fn check_compatible(&self, other: &OperatorMatrix) {
        assert!(
            Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis,
            "operators live on different truncations"
        );
        assert!(
            (self.lambda - other.lambda).abs() <= 1e-12 * self.lambda.abs(),
            "operators at different lambda: {} vs {}",
            self.lambda,
            other.lambda
        );
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.check_compatible(rhs);
        OperatorMatrix::from_parts(self.basis.clone(), self.lambda, &self.entries * &rhs.entries, self.band + rhs.band)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.check_compatible(rhs);
        OperatorMatrix::from_parts(self.basis.clone(), self.lambda, &self.entries + &rhs.entries, self.band.max(rhs.band))
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.check_compatible(rhs);
        OperatorMatrix::from_parts(self.basis.clone(), self.lambda, &self.entries - &rhs.entries, self.band.max(rhs.band))
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.map_entries(|z| -z)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, c: f64) -> OperatorMatrix {
        self.map_entries(|z| z * c)
    }
}

impl Mul<Complex64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, c: Complex64) -> OperatorMatrix {
        self.scale(c)
    }
}
