//! The heat-type approximate identity `φ_r` on `Hⁿ`, its λ-slices, and `ψ_r = φ_{r/2} − φ_r`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::laguerre::laguerre_all;
use crate::error::{Error, Result};
use crate::geometry::{GridFunction, TGrid, Warned, ZGrid, ZSamples};
use crate::hermite::{binomial, OperatorMatrix, TruncatedBasis};
use crate::weyl::weyl_transform;
use crate::HPoint;

/// Largest series length attempted before giving up on the tail bound.
pub const MAX_SERIES_TERMS: usize = 200_000;

/// `φ_r^λ(z) = (2π)^{−n} Σ_k e^{−2r(2k+n)|λ|} |λ|^n φ_{k,λ}(z)` with a certified tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatProfile {
    pub r: f64,
    pub dim: usize,
    /// Dropped tail relative to the retained sum.
    pub tail_tolerance: f64,
}

impl HeatProfile {
    pub fn new(r: f64, dim: usize) -> Result<Self> {
        if r <= 0.0 || !r.is_finite() || dim == 0 {
            return Err(Error::InvalidArgument(format!("need r > 0 and n ≥ 1, got r = {r}, n = {dim}")));
        }
        Ok(HeatProfile { r, dim, tail_tolerance: 1e-10 })
    }

    /// Smallest `K` whose dropped tail `Σ_{k>K} e^{−2r(2k+n)|λ|}C(k+n−1,k)` is below
    /// the tolerance times the retained sum (using `|φ_{k,λ}| ≤ L_k^{n−1}(0)`).
    pub fn k_max(&self, lambda: f64) -> Result<usize> {
        let n = self.dim as f64;
        let w = (-4.0 * self.r * lambda.abs()).exp();
        let mut term = 1.0;
        let mut total = 1.0;
        for k in 0..MAX_SERIES_TERMS {
            let q = w * (k as f64 + n) / (k as f64 + 1.0);
            let next = term * q;
            if q < 1.0 && next / (1.0 - q) <= self.tail_tolerance * total {
                return Ok(k);
            }
            term = next;
            total += term;
        }
        Err(Error::TailNotCertified { k_max: MAX_SERIES_TERMS, tolerance: self.tail_tolerance })
    }

    /// Closed form `(2π)^{−n} (|λ| / (2 sinh 2r|λ|))^n exp(−(|λ||z|²/4) coth 2r|λ|)`.
    pub fn slice(&self, lambda: f64, z_norm_sqr: f64) -> f64 {
        heat_slice_closed_form(self.r, self.dim, lambda, z_norm_sqr)
    }

    /// The truncated Laguerre series, used as an independent check on [`Self::slice`].
    pub fn slice_series(&self, lambda: f64, z_norm_sqr: f64) -> Result<f64> {
        let l = lambda.abs();
        let kmax = self.k_max(lambda)?;
        let n = self.dim;
        let x = l * z_norm_sqr;
        let lag = laguerre_all(kmax, n as f64 - 1.0, x / 2.0);
        let s: f64 = lag
            .iter()
            .enumerate()
            .map(|(k, v)| (-2.0 * self.r * (2 * k + n) as f64 * l).exp() * v)
            .sum();
        Ok((2.0 * PI).powi(-(n as i32)) * l.powi(n as i32) * s * (-x / 4.0).exp())
    }

    /// `φ_r^λ(0)` for `n = 1` by the geometric sum `e^{−2rλ}/(1 − e^{−4rλ})`.
    pub fn origin_value_n1(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        (2.0 * PI).recip() * l * (-2.0 * self.r * l).exp() / (1.0 - (-4.0 * self.r * l).exp())
    }

    /// `φ_r^λ(0)` summed term by term.
    pub fn origin_value_series(&self, lambda: f64) -> Result<f64> {
        let l = lambda.abs();
        let n = self.dim;
        let kmax = self.k_max(lambda)?;
        let s: f64 = (0..=kmax)
            .map(|k| (-2.0 * self.r * (2 * k + n) as f64 * l).exp() * binomial(k + n - 1, k))
            .sum();
        Ok((2.0 * PI).powi(-(n as i32)) * l.powi(n as i32) * s)
    }
}

/// Closed form of the heat slice; continuous at `λ = 0`.
pub fn heat_slice_closed_form(r: f64, n: usize, lambda: f64, z_norm_sqr: f64) -> f64 {
    let l = lambda.abs();
    let u = 2.0 * r * l;
    let (log_amp, coth_term) = if u < 1e-6 {
        // λ/(2 sinh 2rλ) → 1/(4r) and (λ/4) coth(2rλ) → 1/(8r), with O(u²) corrections
        ((1.0 / (4.0 * r)).ln() - u * u / 6.0, (1.0 + u * u / 3.0) / (8.0 * r))
    } else {
        let e = (-2.0 * u).exp();
        let log_sinh2 = u + (1.0 - e).ln();
        ((l).ln() - log_sinh2, l / 4.0 * (1.0 + e) / (1.0 - e))
    };
    (n as f64 * log_amp - coth_term * z_norm_sqr).exp() * (2.0 * PI).powi(-(n as i32))
}

/// A heat slice at one `λ` together with its Weyl transform.
#[derive(Debug, Clone)]
pub struct HeatSlice {
    pub profile: HeatProfile,
    pub lambda: f64,
    pub k_max: usize,
    pub samples: ZSamples,
    pub weyl: OperatorMatrix,
}

/// Samples `φ_r^λ` on a grid and computes `W_λ(φ_r^λ)`; the latter is `c·e^{−2r(2k+n)|λ|}` on `P_k`.
pub fn heat_slice(r: f64, lambda: f64, zgrid: &Arc<ZGrid>, basis: &Arc<TruncatedBasis>) -> Result<Warned<HeatSlice>> {
    let profile = HeatProfile::new(r, basis.dim())?;
    let k_max = profile.k_max(lambda)?;
    let samples = ZSamples::from_fn(zgrid, |z| {
        Complex64::new(profile.slice(lambda, z.iter().map(|c| c.norm_sqr()).sum()), 0.0)
    });
    let w = weyl_transform(&samples, lambda, basis)?;
    Ok(Warned {
        value: HeatSlice { profile, lambda, k_max, samples, weyl: w.value },
        warnings: w.warnings,
    })
}

/// Ratio `⟨P_k W_λ(φ_r^λ)⟩ / e^{−2r(2k+n)|λ|}` on each level; constant equal to the Weyl normalization.
pub fn heat_weyl_normalization(slice: &HeatSlice) -> Vec<Complex64> {
    let b = slice.weyl.basis();
    let n = b.dim();
    (0..b.len())
        .map(|i| {
            let k = b.degree(i);
            slice.weyl.entries()[(i, i)] / (-2.0 * slice.profile.r * (2 * k + n) as f64 * slice.lambda.abs()).exp()
        })
        .collect()
}

/// `φ_r(z,t) = (2π)^{−1} ∫ e^{−iλt} φ_r^λ(z) dλ`, evaluated by the trapezoid rule on `[0, Λ]`
/// (the integrand is even and analytic in λ, so the rule converges geometrically).
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub profile: HeatProfile,
    pub lambda_max: f64,
    pub nodes: usize,
}

impl HeatKernel {
    pub const DEFAULT_NODES: usize = 800;

    pub fn new(r: f64, dim: usize) -> Result<Self> {
        let profile = HeatProfile::new(r, dim)?;
        Ok(HeatKernel { profile, lambda_max: 40.0 / (r * dim as f64), nodes: Self::DEFAULT_NODES })
    }

    pub fn r(&self) -> f64 {
        self.profile.r
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    /// λ nodes and trapezoid weights including the `1/π` prefactor.
    pub fn quadrature(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.lambda_max / self.nodes as f64;
        let nodes: Vec<f64> = (0..=self.nodes).map(|i| i as f64 * h).collect();
        let weights = (0..=self.nodes)
            .map(|i| if i == 0 || i == self.nodes { 0.5 * h / PI } else { h / PI })
            .collect();
        (nodes, weights)
    }

    /// `φ_r` at `(|z|², t)`.
    pub fn eval_radial(&self, z_norm_sqr: f64, t: f64) -> f64 {
        let (nodes, weights) = self.quadrature();
        nodes
            .iter()
            .zip(&weights)
            .map(|(&l, &w)| w * (l * t).cos() * self.profile.slice(l, z_norm_sqr))
            .sum()
    }

    pub fn eval(&self, p: &HPoint) -> f64 {
        self.eval_radial(p.z_norm_sqr(), p.t)
    }

    /// Samples `φ_r` on a grid; warns when the outer shell holds more than 1% of the L¹ mass.
    pub fn sample(&self, zgrid: &Arc<ZGrid>, tgrid: TGrid) -> Warned<GridFunction> {
        let (nodes, weights) = self.quadrature();
        let ts = tgrid.nodes();
        let cos: Vec<Vec<f64>> = ts.iter().map(|&t| nodes.iter().zip(&weights).map(|(&l, &w)| w * (l * t).cos()).collect()).collect();
        let values: Vec<Complex64> = (0..zgrid.len())
            .into_par_iter()
            .flat_map_iter(|iz| {
                let s2: f64 = zgrid.point(iz).iter().map(|c| c.norm_sqr()).sum();
                let slice: Vec<f64> = nodes.iter().map(|&l| self.profile.slice(l, s2)).collect();
                cos.iter()
                    .map(|row| Complex64::new(row.iter().zip(&slice).map(|(a, b)| a * b).sum(), 0.0))
                    .collect::<Vec<_>>()
            })
            .collect();
        let f = GridFunction { zgrid: zgrid.clone(), tgrid, values };
        let shell = f.shell_fraction();
        let mut out = Warned::clean(f);
        if shell > 0.01 {
            out.warnings.push(format!("outer shell holds {:.2}% of the mass of phi_r", 100.0 * shell));
        }
        out
    }
}

/// `φ_r` sampled on a grid.
pub fn approximate_identity(r: f64, zgrid: &Arc<ZGrid>, tgrid: TGrid) -> Result<Warned<GridFunction>> {
    Ok(HeatKernel::new(r, zgrid.dim())?.sample(zgrid, tgrid))
}

/// `ψ_r = φ_{r/2} − φ_r` sampled on a grid.
pub fn psi(r: f64, zgrid: &Arc<ZGrid>, tgrid: TGrid) -> Result<Warned<GridFunction>> {
    let a = approximate_identity(r / 2.0, zgrid, tgrid)?;
    let b = approximate_identity(r, zgrid, tgrid)?;
    let mut warnings = a.warnings;
    warnings.extend(b.warnings);
    Ok(Warned { value: a.value.zip_with(&b.value, |x, y| x - y), warnings })
}

/// `ψ_r(z,t)` pointwise.
pub fn psi_eval(r: f64, p: &HPoint) -> Result<f64> {
    Ok(HeatKernel::new(r / 2.0, p.dim())?.eval(p) - HeatKernel::new(r, p.dim())?.eval(p))
}

/// `(f ×_λ g)(z) = ∫ f(w) g(z − w) e^{(iλ/2) Im(w·z̄)} dw`, the λ-slice of group convolution.
pub fn twisted_convolution(
    f: &(dyn Fn(&[Complex64]) -> Complex64 + Sync),
    g: &(dyn Fn(&[Complex64]) -> Complex64 + Sync),
    lambda: f64,
    zgrid: &ZGrid,
    z: &[Complex64],
) -> Complex64 {
    let w8 = zgrid.weight();
    (0..zgrid.len())
        .into_par_iter()
        .map(|i| {
            let w = zgrid.point(i);
            let diff: Vec<Complex64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
            let im: f64 = w.iter().zip(z).map(|(a, b)| (a * b.conj()).im).sum();
            f(w) * g(&diff) * Complex64::from_polar(w8, 0.5 * lambda * im)
        })
        .collect::<Vec<Complex64>>()
        .iter()
        .sum()
}

/// Residuals of the approximate-identity properties at one `r`.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximateIdentityReport {
    pub r: f64,
    /// `|∫φ_r − 1|`.
    pub integral_defect: f64,
    /// `max |φ_r(z,t) − r^{−(n+1)}φ_1(r^{−1/2}z, r^{−1}t)| / max|φ_r|`.
    pub scaling_defect: f64,
    /// Same for the quarter-power form `r^{−(n+1)/2}φ_1(r^{−1/4}z, r^{−1/2}t)`.
    pub quarter_power_scaling_defect: f64,
    /// `max |φ_r(z,t) − φ_r(−z,−t)|`.
    pub symmetry_defect: f64,
}

/// Integral (on the given grid), scaling and symmetry checks at the given points.
pub fn approximate_identity_report(r: f64, zgrid: &Arc<ZGrid>, tgrid: TGrid, points: &[HPoint]) -> Result<ApproximateIdentityReport> {
    let n = zgrid.dim();
    let kr = HeatKernel::new(r, n)?;
    let k1 = HeatKernel::new(1.0, n)?;
    let integral = kr.sample(zgrid, tgrid).value.integral();
    let scale_at = |p: &HPoint, zs: f64, ts: f64, amp: f64| amp * k1.eval_radial(p.z_norm_sqr() * zs * zs, p.t * ts);
    let mut peak = 0.0f64;
    let (mut sc, mut sq, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    for p in points {
        let v = kr.eval(p);
        peak = peak.max(v.abs());
        sc = sc.max((v - scale_at(p, r.powf(-0.5), 1.0 / r, r.powi(-(n as i32 + 1)))).abs());
        sq = sq.max((v - scale_at(p, r.powf(-0.25), r.powf(-0.5), r.powf(-(n as f64 + 1.0) / 2.0))).abs());
        sym = sym.max((v - kr.eval(&crate::geometry::group_inv(p))).abs());
    }
    Ok(ApproximateIdentityReport {
        r,
        integral_defect: (integral.re - 1.0).abs().max(integral.im.abs()),
        scaling_defect: sc / peak.max(1e-300),
        quarter_power_scaling_defect: sq / peak.max(1e-300),
        symmetry_defect: sym,
    })
}

/// `max_λ,z |(φ_r^λ ×_λ φ_s^λ)(z) − (φ_s^λ ×_λ φ_r^λ)(z)|`: the slices of `φ_r * φ_s − φ_s * φ_r`.
pub fn commutativity_defect(r: f64, s: f64, lambdas: &[f64], zgrid: &ZGrid, points: &[Vec<Complex64>]) -> Result<f64> {
    let n = zgrid.dim();
    let pr = HeatProfile::new(r, n)?;
    let ps = HeatProfile::new(s, n)?;
    let mut worst = 0.0f64;
    for &l in lambdas {
        let f = |z: &[Complex64]| Complex64::new(pr.slice(l, z.iter().map(|c| c.norm_sqr()).sum()), 0.0);
        let g = |z: &[Complex64]| Complex64::new(ps.slice(l, z.iter().map(|c| c.norm_sqr()).sum()), 0.0);
        for z in points {
            let a = twisted_convolution(&f, &g, l, zgrid, z);
            let b = twisted_convolution(&g, &f, l, zgrid, z);
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// `max_p |Σ_{j=1}^N ψ_{2^{−j}}(p) − (φ_{2^{−N−1}} − φ_{1/2})(p)|`.
pub fn telescoping_defect(levels: u32, points: &[HPoint]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let n = p.dim();
        let mut sum = 0.0;
        for j in 1..=levels {
            sum += psi_eval(2f64.powi(-(j as i32)), p)?;
        }
        let rhs = HeatKernel::new(2f64.powi(-(levels as i32) - 1), n)?.eval(p) - HeatKernel::new(0.5, n)?.eval(p);
        worst = worst.max((sum - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize) -> Vec<HPoint> {
        (0..20)
            .map(|i| {
                let a = i as f64 * 0.37;
                let z = (0..n).map(|j| Complex64::new(0.3 * (a + j as f64).sin(), 0.25 * (1.3 * a).cos())).collect();
                HPoint::new(z, 0.2 * (0.7 * a).sin())
            })
            .collect()
    }

    #[test]
    fn closed_form_matches_series() {
        for n in 1..=2 {
            let p = HeatProfile::new(0.3, n).unwrap();
            for &l in &[0.05, 0.5, 2.0, -3.0] {
                for &s2 in &[0.0, 0.4, 3.0] {
                    let a = p.slice(l, s2);
                    let b = p.slice_series(l, s2).unwrap();
                    assert!((a - b).abs() < 1e-9 * a.abs().max(1e-12), "n={n} λ={l} |z|²={s2}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn origin_value_two_ways() {
        let p = HeatProfile::new(0.2, 1).unwrap();
        for &l in &[0.1, 1.0, 5.0] {
            let a = p.origin_value_n1(l);
            assert!((a - p.origin_value_series(l).unwrap()).abs() < 2e-10 * a);
            assert!((a - p.slice(l, 0.0)).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn slice_is_continuous_at_zero() {
        let a = heat_slice_closed_form(0.4, 2, 0.0, 0.7);
        let b = heat_slice_closed_form(0.4, 2, 1e-5, 0.7);
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn tail_budget_is_enforced() {
        let p = HeatProfile::new(1e-9, 1).unwrap();
        assert!(matches!(p.k_max(1e-6), Err(Error::TailNotCertified { .. })));
        assert!(HeatProfile::new(-1.0, 1).is_err());
    }

    #[test]
    fn weyl_side_is_diagonal_heat_multiplier() {
        let g = Arc::new(ZGrid::new(1, 10.0, 161).unwrap());
        let b = Arc::new(TruncatedBasis::new(1, 12));
        let mut consts = Vec::new();
        for &l in &[0.5, 1.0, 2.0] {
            let s = heat_slice(0.2, l, &g, &b).unwrap().value;
            let ratios = heat_weyl_normalization(&s);
            let off = s.weyl.entries().iter().enumerate().filter(|(i, _)| i % (b.len() + 1) != 0).map(|(_, v)| v.norm()).fold(0.0, f64::max);
            assert!(off < 1e-8, "off-diagonal {off}");
            for r in &ratios[..8] {
                assert!((r - ratios[0]).norm() < 1e-6 * ratios[0].norm(), "{ratios:?}");
            }
            consts.push(ratios[0]);
        }
        for c in &consts {
            assert!((c - 1.0).norm() < 1e-6, "normalization {c}");
        }
    }

    #[test]
    fn approximate_identity_properties() {
        let r = 0.25;
        let g = Arc::new(ZGrid::new(1, 4.0, 81).unwrap());
        let t = TGrid::power_of_two(6.0, 8).unwrap();
        let rep = approximate_identity_report(r, &g, t, &pts(1)).unwrap();
        assert!(rep.integral_defect < 1e-3, "{rep:?}");
        assert!(rep.scaling_defect < 1e-3, "{rep:?}");
        assert!(rep.quarter_power_scaling_defect > 1e-2, "{rep:?}");
        assert!(rep.symmetry_defect < 1e-10, "{rep:?}");
    }

    #[test]
    fn slices_commute_under_twisted_convolution() {
        let g = ZGrid::new(1, 6.0, 121).unwrap();
        let points: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.3, -0.2)], vec![Complex64::new(-0.5, 0.7)]];
        let d = commutativity_defect(0.3, 0.5, &[0.5, 2.0], &g, &points).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn telescoping_sum() {
        let d = telescoping_defect(5, &pts(1)[..5]).unwrap();
        assert!(d < 1e-10, "{d}");
    }
}
