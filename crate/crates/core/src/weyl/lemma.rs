use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::packet::ZPacket;
use super::transform::weyl_transform;
use crate::error::{Error, Result};
use crate::geometry::{ZGrid, ZSamples};
use crate::hermite::{ladder_matrix, Ladder, OperatorMatrix, TruncatedBasis};

/// Interior residuals of the Weyl-side images of `Z_j`, `Z̄_j`, `z_j`, `z̄_j`.
///
/// `corrected` holds the forms that hold with the ladder convention used here
/// (`W(Z h) = −(i/2)A*W(h)`, `W(Z̄ h) = −(i/2)A W(h)`, `λW(zh) = i[W(h),A]`,
/// `λW(z̄h) = i[A*,W(h)]`); `printed` holds the textbook-style forms
/// `iW(h)A*`, `iW(h)A`, `2i[W(h),A]`, `2i[A*,W(h)]` for comparison.
#[derive(Debug, Clone, Serialize)]
pub struct LadderIdentityReport {
    pub lambda: f64,
    pub coordinate: usize,
    pub corrected: [f64; 4],
    pub printed: [f64; 4],
    pub scale: f64,
}

impl LadderIdentityReport {
    pub fn corrected_max(&self) -> f64 {
        self.corrected.iter().copied().fold(0.0, f64::max)
    }

    pub fn printed_max(&self) -> f64 {
        self.printed.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks the four identities for coordinate `j` on a packet, `λ > 0`.
pub fn ladder_identities(
    h: &ZPacket,
    j: usize,
    lambda: f64,
    grid: &Arc<ZGrid>,
    basis: &Arc<TruncatedBasis>,
) -> Result<LadderIdentityReport> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("the ladder identities are checked for lambda > 0".into()));
    }
    let w = |f: &(dyn Fn(&[Complex64]) -> Complex64 + Sync)| -> Result<OperatorMatrix> {
        Ok(weyl_transform(&ZSamples::from_fn(grid, f), lambda, basis)?.value)
    };
    let wh = w(&|z| h.eval(z))?;
    let wzh = w(&|z| h.d_z(j, z) - lambda / 4.0 * z[j].conj() * h.eval(z))?;
    let wzbh = w(&|z| h.d_zbar(j, z) + lambda / 4.0 * z[j] * h.eval(z))?;
    let wmul = w(&|z| z[j] * h.eval(z))?;
    let wmulb = w(&|z| z[j].conj() * h.eval(z))?;
    let a = ladder_matrix(j, lambda, Ladder::Annihilation, basis)?;
    let ad = ladder_matrix(j, lambda, Ladder::Creation, basis)?;
    let i = Complex64::i();
    let half_i = Complex64::new(0.0, -0.5);
    let diff = |x: &OperatorMatrix, y: &OperatorMatrix| x.interior_max_diff(&y.clone().with_band(x.band().max(y.band()) + 1));
    let corrected = [
        diff(&wzh, &(&(&ad * &wh) * half_i)),
        diff(&wzbh, &(&(&a * &wh) * half_i)),
        diff(&(&wmul * lambda), &(&wh.commutator(&a) * i)),
        diff(&(&wmulb * lambda), &(&ad.commutator(&wh) * i)),
    ];
    let printed = [
        diff(&wzh, &(&(&wh * &ad) * i)),
        diff(&wzbh, &(&(&wh * &a) * i)),
        diff(&(&wmul * lambda), &(&wh.commutator(&a) * (2.0 * i))),
        diff(&(&wmulb * lambda), &(&ad.commutator(&wh) * (2.0 * i))),
    ];
    Ok(LadderIdentityReport { lambda, coordinate: j, corrected, printed, scale: wh.max_abs() })
}
