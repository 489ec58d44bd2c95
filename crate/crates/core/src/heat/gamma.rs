//! The difference-differential operator `Γ_λ^k` on Hermite symbols and the
//! λ-derivative of spectral kernels `b(L_λ)`.

use num_complex::Complex64;
use serde::Serialize;

use super::laguerre::laguerre_all;
use crate::error::{Error, Result};
use crate::multiplier::HermiteSymbol;
use crate::scalar::Real;

/// `l`-th derivative of `b_r(x) = e^{−rx/2} − e^{−rx}`.
pub fn b_function<T: Real>(r: T, x: T, order: u32) -> T {
    assert!(order <= 12, "derivative order above 12");
    let half = r / T::lit(2.0);
    let k = order as i32;
    (-half).powi(k) * (-half * x).exp() - (-r).powi(k) * (-r * x).exp()
}

/// `Γ_λ^k a = ∂_λ a(k,λ) − (k/2λ)Δ₋a(k,λ) − ((k+n)/2λ)Δ₊a(k,λ)`, `λ > 0`.
/// Uses the symbol's analytic λ-derivative when present, else a 4-point central difference.
pub fn gamma_operator(sym: &HermiteSymbol, n: usize, k: usize, lambda: f64) -> Result<Complex64> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("gamma is defined here for lambda > 0 only".into()));
    }
    let d = match sym.eval_d_lambda(k, lambda) {
        Some(d) => d,
        None => {
            let h = 1e-3 * lambda;
            let f = |l: f64| sym.eval(k, l);
            (f(lambda - 2.0 * h) - f(lambda + 2.0 * h) + (f(lambda + h) - f(lambda - h)) * 8.0) / (12.0 * h)
        }
    };
    let minus = if k == 0 { Complex64::new(0.0, 0.0) } else { sym.eval(k, lambda) - sym.eval(k - 1, lambda) };
    let plus = sym.eval(k + 1, lambda) - sym.eval(k, lambda);
    Ok(d - (minus * k as f64 + plus * (k + n) as f64) / (2.0 * lambda))
}

/// `Γ a` as a new symbol (no analytic λ-derivative).
pub fn gamma_symbol(sym: &HermiteSymbol, n: usize) -> HermiteSymbol {
    let s = sym.clone();
    HermiteSymbol::new(format!("Gamma({})", sym.label), move |k, l| gamma_operator(&s, n, k, l).unwrap_or_default())
}

/// Pointwise-in-z comparison of `d/dλ b(L_λ)` with the expansion into `b'`, `Δ₋b`, `Δ₊b`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDerivativeReport {
    pub lambda: f64,
    pub step: f64,
    /// `max_z |FD − series| / max_z |series|`.
    pub residual: f64,
    pub scale: f64,
}

/// `b(L_λ)(z) = Σ_{k ≤ K} b((2k+n)|λ|) |λ|^n φ_{k,λ}(z)`.
pub fn spectral_kernel(b: &dyn Fn(f64) -> f64, n: usize, lambda: f64, z_norm_sqr: f64, k_max: usize) -> f64 {
    let l = lambda.abs();
    let x = l * z_norm_sqr;
    let lag = laguerre_all(k_max, n as f64 - 1.0, x / 2.0);
    let s: f64 = lag.iter().enumerate().map(|(k, v)| b((2 * k + n) as f64 * l) * v).sum();
    l.powi(n as i32) * s * (-x / 4.0).exp()
}

/// Central-difference `d/dλ b(L_λ)` against
/// `Σ(2k+n)b'((2k+n)λ)|λ|^nφ_k − (1/2λ)Σ kΔ₋b |λ|^nφ_k − (1/2λ)Σ(k+n)Δ₊b |λ|^nφ_k`.
pub fn verify_corollary_4_3(
    b: &dyn Fn(f64) -> f64,
    db: &dyn Fn(f64) -> f64,
    n: usize,
    lambda: f64,
    step: f64,
    z_norm_sqrs: &[f64],
    k_max: usize,
) -> Result<SpectralDerivativeReport> {
    if lambda <= 0.0 || step <= 0.0 || step >= lambda {
        return Err(Error::InvalidArgument(format!("need 0 < step < lambda, got {step}, {lambda}")));
    }
    let e = |k: usize| (2 * k + n) as f64 * lambda;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &s2 in z_norm_sqrs {
        let fd = (spectral_kernel(b, n, lambda + step, s2, k_max) - spectral_kernel(b, n, lambda - step, s2, k_max)) / (2.0 * step);
        let x = lambda * s2;
        let lag = laguerre_all(k_max, n as f64 - 1.0, x / 2.0);
        let mut series = 0.0;
        for (k, phi) in lag.iter().enumerate() {
            let dminus = if k == 0 { 0.0 } else { b(e(k)) - b(e(k - 1)) };
            let dplus = b(e(k + 1)) - b(e(k));
            let c = (2 * k + n) as f64 * db(e(k)) - (k as f64 * dminus + (k + n) as f64 * dplus) / (2.0 * lambda);
            series += c * phi;
        }
        series *= lambda.powi(n as i32) * (-x / 4.0).exp();
        worst = worst.max((fd - series).abs());
        scale = scale.max(series.abs());
    }
    Ok(SpectralDerivativeReport { lambda, step, residual: worst / scale.max(1e-300), scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_function_values() {
        assert_eq!(b_function(1.0f64, 0.0, 0), 0.0);
        assert!((b_function(1.0f64, 0.0, 1) - 0.5).abs() < 1e-15);
        let x0 = 2.0 * 2f64.ln();
        assert!((b_function(1.0f64, x0, 0) - 0.25).abs() < 1e-15);
        let grid_max = (0..20000).map(|i| b_function(1.0f64, i as f64 * 1e-3, 0)).fold(0.0, f64::max);
        assert!((grid_max - 0.25).abs() < 1e-7);
        assert!(b_function(1.0f64, x0, 1).abs() < 1e-15);
        assert!((b_function(1.0f32, 0.0, 1) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn gamma_annihilates_eigenvalue() {
        for n in 1..=3 {
            let sym = HermiteSymbol::eigenvalue(n);
            for k in 0..=20 {
                for &l in &[0.125, 0.7, 1.0, 3.3, 8.0] {
                    let g = gamma_operator(&sym, n, k, l).unwrap();
                    assert!(g.norm() < 1e-14 * (2 * k + n) as f64, "n={n} k={k} λ={l}: {g}");
                }
            }
        }
    }

    #[test]
    fn gamma_vanishes_exactly_on_dyadic_lambda() {
        let sym = HermiteSymbol::eigenvalue(1);
        for k in 0..=20 {
            for j in -3..=3 {
                assert_eq!(gamma_operator(&sym, 1, k, 2f64.powi(j)).unwrap().norm(), 0.0);
            }
        }
    }

    #[test]
    fn gamma_of_square_and_constant() {
        let n = 2;
        let sq = HermiteSymbol::spectral(n, "x^2", |x| x * x, |x| 2.0 * x);
        let c = HermiteSymbol::constant(Complex64::new(2.5, 0.0));
        for k in 0..10 {
            let l = 1.7;
            let g = gamma_operator(&sq, n, k, l).unwrap();
            assert!((g.re + 2.0 * n as f64 * l).abs() < 1e-12 * (2 * k + n).pow(2) as f64, "{g}");
            assert_eq!(gamma_operator(&c, n, k, l).unwrap(), Complex64::new(0.0, 0.0));
        }
        assert!(gamma_operator(&c, n, 0, -1.0).is_err());
    }

    #[test]
    fn numerical_derivative_fallback() {
        let sq = HermiteSymbol::new("x^2", |k, l: f64| Complex64::new(((2 * k + 1) as f64 * l).powi(2), 0.0));
        for k in 0..5 {
            let g = gamma_operator(&sq, 1, k, 1.3).unwrap();
            assert!((g.re + 2.0 * 1.3).abs() < 1e-8, "{g}");
        }
    }

    #[test]
    fn spectral_derivative_expansion() {
        let b = |x: f64| b_function(1.0, x, 0);
        let db = |x: f64| b_function(1.0, x, 1);
        let s2 = [0.0, 0.3, 1.0, 2.5, 6.0];
        let coarse = verify_corollary_4_3(&b, &db, 1, 1.0, 1e-3, &s2, 80).unwrap();
        let fine = verify_corollary_4_3(&b, &db, 1, 1.0, 5e-4, &s2, 80).unwrap();
        assert!(coarse.residual < 1e-5, "{coarse:?}");
        let ratio = coarse.residual / fine.residual;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        let zero = verify_corollary_4_3(&|_| 0.0, &|_| 0.0, 1, 1.0, 1e-3, &s2, 10).unwrap();
        assert_eq!(zero.residual, 0.0);
    }
}
