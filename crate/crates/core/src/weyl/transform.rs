use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::displacement::{displacement_1d, displacement_parameter, tensor_from_1d};
use crate::error::{Error, Result};
use crate::geometry::{Warned, ZGrid, ZSamples};
use crate::hermite::{CMatrix, OperatorMatrix, TruncatedBasis};

/// Relative HS content allowed in the top degree layer before inversion refuses.
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Fixed chunk count so parallel reductions sum in a reproducible order.
const CHUNKS: usize = 64;

/// Matrix of `π_λ(z)` without the error plumbing of [`super::rep_matrix`].
pub(crate) fn displacement_matrix(lambda: f64, z: &[Complex64], basis: &TruncatedBasis) -> CMatrix {
    let factors: Vec<_> = z.iter().map(|&w| displacement_1d(displacement_parameter(lambda, w), basis.cutoff())).collect();
    tensor_from_1d(basis, &factors)
}

/// `Σ_i f(i)` over `0..len`, evaluated in parallel over fixed chunks and summed in order.
pub(crate) fn chunked_matrix_sum(len: usize, dim: usize, f: impl Fn(usize, &mut CMatrix) + Sync) -> CMatrix {
    let chunk = len.div_ceil(CHUNKS).max(1);
    let parts: Vec<CMatrix> = (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = CMatrix::zeros(dim, dim);
            for i in c * chunk..((c + 1) * chunk).min(len) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(CMatrix::zeros(dim, dim), |a, b| a + b)
}

/// `W_λ(g) = ∫ g(z) π_λ(z) dz` by the grid rule.
pub fn weyl_transform(g: &ZSamples, lambda: f64, basis: &Arc<TruncatedBasis>) -> Result<Warned<OperatorMatrix>> {
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    if g.grid.dim() != basis.dim() {
        return Err(Error::InvalidArgument("grid and basis dimensions differ".into()));
    }
    let d = basis.len();
    let sum = chunked_matrix_sum(g.grid.len(), d, |i, acc| {
        let v = g.values[i];
        if v.norm_sqr() > 0.0 {
            let m = displacement_matrix(lambda, g.grid.point(i), basis);
            acc.zip_apply(&m, |a, b| *a += v * b);
        }
    });
    let mut warnings = Vec::new();
    let frac = g.shell_fraction();
    if frac > 0.01 {
        warnings.push(format!("input carries {:.2}% of its L1 mass in the outer shell", 100.0 * frac));
    }
    Ok(Warned { value: OperatorMatrix::from_parts(basis.clone(), lambda, sum * Complex64::new(g.grid.weight(), 0.0), 0), warnings })
}

/// A function on `ℂⁿ` given by a finite special-Hermite expansion, the
/// preimage of a truncated operator under `W_λ`.
#[derive(Debug, Clone)]
pub struct WeylInverse {
    lambda: f64,
    basis: Arc<TruncatedBasis>,
    coeffs: CMatrix,
}

impl WeylInverse {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `g(z) = (2π)^{−n}|λ|^n tr(m π_λ(−z))`, equivalently
    /// `Σ (2π)^{−n/2}|λ|^n (−1)^{|α|+|β|} m_{αβ} Φ_{α,β}^λ(z)`.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let neg: Vec<Complex64> = z.iter().map(|w| -w).collect();
        let d = displacement_matrix(self.lambda, &neg, &self.basis);
        let n = self.basis.dim() as i32;
        let tr: Complex64 = self.coeffs.iter().zip(d.transpose().iter()).map(|(a, b)| a * b).sum();
        tr * ((2.0 * PI).powi(-n) * self.lambda.abs().powi(n))
    }

    pub fn sample(&self, grid: &Arc<ZGrid>) -> ZSamples {
        ZSamples::from_fn(grid, |z| self.eval(z))
    }
}

/// Inverts `W_λ` on the truncation, refusing operators with top-layer content above `tolerance`.
pub fn inverse_weyl_with_tolerance(m: &OperatorMatrix, tolerance: f64) -> Result<WeylInverse> {
    let content = m.boundary_content(1);
    if content > tolerance {
        return Err(Error::BoundaryBand { content, tolerance });
    }
    Ok(WeylInverse { lambda: m.lambda(), basis: m.basis().clone(), coeffs: m.entries().clone() })
}

pub fn inverse_weyl(m: &OperatorMatrix) -> Result<WeylInverse> {
    inverse_weyl_with_tolerance(m, DEFAULT_BOUNDARY_TOLERANCE)
}

/// `T_m^λ h = W_λ^{−1}(m W_λ(h))`, sampled on `h`'s grid.
pub fn apply_weyl_multiplier(m: &OperatorMatrix, h: &ZSamples) -> Result<Warned<ZSamples>> {
    let w = weyl_transform(h, m.lambda(), m.basis())?;
    let prod = m * &w.value;
    let g = inverse_weyl_with_tolerance(&prod, DEFAULT_BOUNDARY_TOLERANCE.max(10.0 * w.value.boundary_content(1)))?;
    Ok(Warned { value: g.sample(&h.grid), warnings: w.warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::spectral_projection;
    use crate::weyl::special_hermite;
    use rand::{Rng, SeedableRng};

    fn setup(k: usize) -> (Arc<TruncatedBasis>, Arc<ZGrid>) {
        (Arc::new(TruncatedBasis::new(1, k)), Arc::new(ZGrid::new(1, 12.0, 161).unwrap()))
    }

    #[test]
    fn ground_state_dictionary() {
        let b = Arc::new(TruncatedBasis::new(1, 8));
        let g = Arc::new(ZGrid::new(1, 16.0, 213).unwrap());
        for &lam in &[0.5, 1.0, -2.0] {
            let phi = ZSamples::from_fn(&g, |z| special_hermite(&[0], &[0], lam, z).unwrap());
            let w = weyl_transform(&phi, lam, &b).unwrap().value;
            let expect = (2.0 * PI).sqrt() / lam.abs();
            assert!((w.entries()[(0, 0)].re - expect).abs() < 1e-10, "{lam}: {} vs {expect}", w.entries()[(0, 0)]);
            let mut rest = w.clone();
            rest = &rest - &(&spectral_projection(0, lam, &b) * expect);
            assert!(rest.max_abs() < 1e-10, "{lam}: {}", rest.max_abs());
        }
    }

    #[test]
    fn dictionary_signs() {
        let (b, g) = setup(6);
        let lam = 1.0;
        for (a, c) in [(1usize, 0usize), (2, 3), (0, 4)] {
            let phi = ZSamples::from_fn(&g, |z| special_hermite(&[a], &[c], lam, z).unwrap());
            let w = weyl_transform(&phi, lam, &b).unwrap().value;
            let sign = if (a + c) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((w.entries()[(a, c)].re - sign * (2.0 * PI).sqrt()).abs() < 1e-9);
            assert!((w.entries()[(a, c)].im).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let (b, g) = setup(4);
        let w = weyl_transform(&ZSamples::zeros(&g), 1.0, &b).unwrap().value;
        assert_eq!(w.max_abs(), 0.0);
        let inv = inverse_weyl(&OperatorMatrix::zeros(&b, 1.0)).unwrap();
        assert_eq!(inv.eval(&[Complex64::new(0.2, 0.1)]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn round_trip_interior() {
        let (b, g) = setup(10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let lam = 1.3;
        let mut m = OperatorMatrix::zeros(&b, lam).into_entries();
        for i in 0..7 {
            for j in 0..7 {
                m[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let m = OperatorMatrix::new(b.clone(), lam, m, 0).unwrap();
        let back = weyl_transform(&inverse_weyl(&m).unwrap().sample(&g), lam, &b).unwrap().value;
        assert!((&back - &m).max_abs() < 1e-6);
    }

    #[test]
    fn refuses_boundary_content() {
        let (b, _) = setup(4);
        let m = spectral_projection(4, 1.0, &b);
        assert!(matches!(inverse_weyl(&m), Err(Error::BoundaryBand { .. })));
    }

    #[test]
    fn projection_keeps_first_index_zero() {
        let (b, g) = setup(12);
        let lam = 1.0;
        let h = ZSamples::from_fn(&g, |z| {
            special_hermite(&[0], &[2], lam, z).unwrap() + special_hermite(&[1], &[1], lam, z).unwrap() * 0.5
        });
        let out = apply_weyl_multiplier(&spectral_projection(0, lam, &b), &h).unwrap().value;
        let expect = ZSamples::from_fn(&g, |z| special_hermite(&[0], &[2], lam, z).unwrap());
        assert!(out.max_abs_diff(&expect) < 1e-9);
        assert!(out.l2_norm() <= h.l2_norm());
    }
}
