//! Weighted L² moments of `T_Mψ_r` for radial (spectral) multipliers, their
//! scaling exponents in `r`, and the dyadic operator-norm envelope of `ψ_r`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::gamma::{b_function, gamma_symbol};
use super::kernel::HeatProfile;
use super::laguerre::laguerre_all;
use crate::derivations::delta_power;
use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::hermite::{in_dyadic_band, OperatorMatrix, TruncatedBasis};
use crate::multiplier::{hermite_multiplier, HermiteSymbol};
use crate::weyl::LambdaGrid;

type Spectral = dyn Fn(f64) -> f64 + Send + Sync;

/// A multiplier `M(λ) = m(H(λ))` given by a real function of the eigenvalue `(2k+n)|λ|`.
#[derive(Clone)]
pub enum RadialMultiplier {
    Identity,
    Zero,
    Spectral { label: String, m: Arc<Spectral> },
}

impl std::fmt::Debug for RadialMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialMultiplier::Identity => write!(f, "Identity"),
            RadialMultiplier::Zero => write!(f, "Zero"),
            RadialMultiplier::Spectral { label, .. } => write!(f, "Spectral({label})"),
        }
    }
}

impl RadialMultiplier {
    pub fn spectral(label: impl Into<String>, m: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RadialMultiplier::Spectral { label: label.into(), m: Arc::new(m) }
    }
}

/// Which kernel the multiplier acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    Phi,
    Psi,
}

/// `(slice, ∂_s slice)` of `T_M K_r` at `(λ, s = |z|)`.
fn slice_and_ds(m: &RadialMultiplier, kind: KernelKind, r: f64, n: usize, lambda: f64, s: f64) -> Result<(f64, f64)> {
    let closed = |rr: f64| -> Result<(f64, f64)> {
        let p = HeatProfile::new(rr, n)?;
        let v = p.slice(lambda, s * s);
        let l = lambda.abs();
        let u = 2.0 * rr * l;
        let c = if u < 1e-6 { (1.0 + u * u / 3.0) / (8.0 * rr) } else { l / 4.0 / u.tanh() };
        Ok((v, -2.0 * c * s * v))
    };
    match m {
        RadialMultiplier::Zero => Ok((0.0, 0.0)),
        RadialMultiplier::Identity => match kind {
            KernelKind::Phi => closed(r),
            KernelKind::Psi => {
                let (a, da) = closed(r / 2.0)?;
                let (b, db) = closed(r)?;
                Ok((a - b, da - db))
            }
        },
        RadialMultiplier::Spectral { m, .. } => {
            let l = lambda.abs();
            let tail_r = if kind == KernelKind::Psi { r / 2.0 } else { r };
            let kmax = HeatProfile::new(tail_r, n)?.k_max(lambda)?;
            let x = l * s * s / 2.0;
            let a = n as f64 - 1.0;
            let lag = laguerre_all(kmax, a, x);
            let lag1 = laguerre_all(kmax, a + 1.0, x);
            let (mut v, mut dv) = (0.0, 0.0);
            for k in 0..=kmax {
                let e = (2 * k + n) as f64 * l;
                let w = m(e) * match kind {
                    KernelKind::Phi => (-2.0 * r * e).exp(),
                    KernelKind::Psi => b_function(2.0 * r, e, 0),
                };
                v += w * lag[k];
                let dl = if k == 0 { 0.0 } else { -lag1[k - 1] };
                dv += w * (dl - 0.5 * lag[k]);
            }
            let pre = (2.0 * PI).powi(-(n as i32)) * l.powi(n as i32) * (-x / 2.0).exp();
            Ok((pre * v, pre * dv * l * s))
        }
    }
}

/// Fixed physical grid for radial moments: `s ∈ [0, S]`, `t ∈ [0, T]`, midpoint λ-nodes on `[0, Λ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelGrid {
    pub dim: usize,
    pub s_max: f64,
    pub s_nodes: usize,
    pub t_max: f64,
    pub t_nodes: usize,
    pub lambda_max: f64,
    pub lambda_nodes: usize,
}

impl KernelGrid {
    /// A grid resolving `ψ_r` for every `r ∈ [r_min, r_max]`.
    pub fn for_r_range(dim: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min) {
            return Err(Error::InvalidArgument(format!("bad r-range [{r_min}, {r_max}]")));
        }
        let s_max = 13.0 * r_max.sqrt();
        let t_max = 13.0 * r_max;
        let ds = r_min.sqrt() / 8.0;
        let dt = r_min / 8.0;
        let lambda_max = 40.0 / (dim as f64 * r_min);
        let dl = PI / t_max;
        Ok(KernelGrid {
            dim,
            s_max,
            s_nodes: (s_max / ds).ceil() as usize + 1,
            t_max,
            t_nodes: (t_max / dt).ceil() as usize + 1,
            lambda_max,
            lambda_nodes: (lambda_max / dl).ceil() as usize,
        })
    }

    pub fn ds(&self) -> f64 {
        self.s_max / (self.s_nodes - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.t_nodes - 1) as f64
    }

    pub fn dlambda(&self) -> f64 {
        self.lambda_max / self.lambda_nodes as f64
    }

    /// `[r_min, r_max]` this grid resolves (the inverse of [`Self::for_r_range`]).
    pub fn admissible_r(&self) -> (f64, f64) {
        let r_min = (64.0 * self.ds() * self.ds()).max(8.0 * self.dt()).max(40.0 / (self.dim as f64 * self.lambda_max));
        let r_max = (self.s_max / 13.0).powi(2).min(self.t_max / 13.0).min(PI / (13.0 * self.dlambda()));
        (r_min * (1.0 - 1e-9), r_max * (1.0 + 1e-9))
    }

    /// Grid covering `s ≤ s_max`, `t ≤ t_max` that resolves scales down to `r_min`.
    pub fn covering(dim: usize, s_max: f64, t_max: f64, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0 && s_max > 0.0 && t_max > 0.0) {
            return Err(Error::InvalidArgument("covering grid needs positive extents and r_min".into()));
        }
        let (ds, dt) = (r_min.sqrt() / 8.0, r_min / 8.0);
        let lambda_max = 40.0 / (dim as f64 * r_min);
        Ok(KernelGrid {
            dim,
            s_max,
            s_nodes: (s_max / ds).ceil() as usize + 1,
            t_max,
            t_nodes: (t_max / dt).ceil() as usize + 1,
            lambda_max,
            lambda_nodes: (lambda_max * t_max / PI).ceil() as usize,
        })
    }

    pub fn check(&self, r: f64) -> Result<()> {
        let (min, max) = self.admissible_r();
        if r < min || r > max {
            return Err(Error::Resolution { r, min, max });
        }
        Ok(())
    }
}

/// `T_M K_r` and its derivatives tabulated on the radial grid.
#[derive(Debug, Clone)]
pub struct RadialTable {
    pub grid: KernelGrid,
    pub r: f64,
    /// `K(s_i, t_j)`, row-major in `s`.
    pub value: DMatrix<f64>,
    pub d_s: DMatrix<f64>,
    pub d_t: DMatrix<f64>,
}

impl RadialTable {
    pub fn build(m: &RadialMultiplier, kind: KernelKind, r: f64, grid: &KernelGrid) -> Result<Self> {
        grid.check(r)?;
        Self::build_truncated(m, kind, r, grid)
    }

    /// Like [`Self::build`] but only enforces the fine-scale resolution limits: the
    /// table may stop before the kernel has decayed, for callers that never look past it.
    pub fn build_truncated(m: &RadialMultiplier, kind: KernelKind, r: f64, grid: &KernelGrid) -> Result<Self> {
        let (min, max) = grid.admissible_r();
        if r < min {
            return Err(Error::Resolution { r, min, max });
        }
        let n = grid.dim;
        let (ns, nt) = (grid.s_nodes, grid.t_nodes);
        let dt = grid.dt();
        // midpoint λ-nodes with dλ·dt·M = 2π, so every t-row is one inverse FFT of length M
        let fft_len = (2 * (nt - 1)).max(2).next_power_of_two();
        let mut dl = 2.0 * PI / (fft_len as f64 * dt);
        let mut fft_len = fft_len;
        while dl > grid.dlambda() {
            fft_len *= 2;
            dl /= 2.0;
        }
        let nl = (grid.lambda_max / dl).ceil() as usize;
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(fft_len);
        // cos((k+½)dλ·j dt) = Re[e^{iπj/M} e^{2πikj/M}], and the sine is the imaginary part
        let shift: Vec<Complex64> = (0..nt).map(|j| Complex64::from_polar(1.0, PI * j as f64 / fft_len as f64)).collect();
        let w = dl / PI;
        let rows: Vec<[Vec<f64>; 3]> = (0..ns)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 * grid.ds();
                let mut bins = vec![[Complex64::new(0.0, 0.0); 3]; fft_len];
                for k in 0..nl {
                    let l = (k as f64 + 0.5) * dl;
                    let (v, dv) = slice_and_ds(m, kind, r, n, l, s)?;
                    let b = &mut bins[k % fft_len];
                    b[0] += w * v;
                    b[1] += w * dv;
                    b[2] += -w * l * v;
                }
                let mut out: [Vec<f64>; 3] = Default::default();
                for (c, o) in out.iter_mut().enumerate() {
                    let mut buf: Vec<Complex64> = bins.iter().map(|b| b[c]).collect();
                    fft.process(&mut buf);
                    *o = (0..nt)
                        .map(|j| {
                            let z = shift[j] * buf[j];
                            if c == 2 { z.im } else { z.re }
                        })
                        .collect();
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let pick = |c: usize| DMatrix::from_fn(ns, nt, |i, j| rows[i][c][j]);
        Ok(RadialTable { grid: *grid, r, value: pick(0), d_s: pick(1), d_t: pick(2) })
    }

    /// Bilinear interpolation of `K(|z|, |t|)`; zero outside the table.
    pub fn interpolate(&self, s: f64, t: f64) -> f64 {
        let (fs, ft) = (s / self.grid.ds(), t.abs() / self.grid.dt());
        let (i, j) = (fs.floor() as usize, ft.floor() as usize);
        if i + 1 >= self.grid.s_nodes || j + 1 >= self.grid.t_nodes {
            return 0.0;
        }
        let (a, b) = (fs - i as f64, ft - j as f64);
        let v = &self.value;
        (1.0 - a) * ((1.0 - b) * v[(i, j)] + b * v[(i, j + 1)]) + a * ((1.0 - b) * v[(i + 1, j)] + b * v[(i + 1, j + 1)])
    }

    /// `∫_{Hⁿ} w(s, t, K, K_s, K_t) dz dt` by the trapezoid rule, using radial symmetry and evenness in `t`.
    fn integrate(&self, f: impl Fn(f64, f64, f64, f64, f64) -> f64 + Sync) -> f64 {
        let g = &self.grid;
        let n = g.dim;
        let sphere = 2.0 * PI.powi(n as i32) / (1..n).map(|k| k as f64).product::<f64>();
        let (ds, dt) = (g.ds(), g.dt());
        let total: f64 = (0..g.s_nodes)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 * ds;
                let ws = if i == 0 || i + 1 == g.s_nodes { 0.5 } else { 1.0 } * s.powi(2 * n as i32 - 1);
                let mut acc = 0.0;
                for j in 0..g.t_nodes {
                    let wt = if j == 0 || j + 1 == g.t_nodes { 0.5 } else { 1.0 };
                    let t = j as f64 * dt;
                    acc += wt * f(s, t, self.value[(i, j)], self.d_s[(i, j)], self.d_t[(i, j)]);
                }
                ws * acc
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        // Euler–Maclaurin: for n = 1 the s-integrand `s·h(s)` has slope `h(0)` at the origin
        let correction = if n == 1 {
            (0..g.t_nodes)
                .map(|j| {
                    let wt = if j == 0 || j + 1 == g.t_nodes { 0.5 } else { 1.0 };
                    wt * f(0.0, j as f64 * dt, self.value[(0, j)], self.d_s[(0, j)], self.d_t[(0, j)])
                })
                .sum::<f64>()
                * ds
                / 12.0
        } else {
            0.0
        };
        let total = total + correction;
        // ∫_{−T}^{T} = 2∫_0^T for even integrands
        2.0 * sphere * total * ds * dt
    }
}

impl RadialTable {
    /// `∫ |K|² ρ^l`.
    pub fn moment(&self, l: f64) -> f64 {
        self.integrate(|s, t, k, _, _| k * k * rho(s, t).powf(l))
    }

    /// `∫ |VK|² ρ^l`, see [`gradient_kernel_moment`].
    pub fn gradient_moment(&self, l: f64, field: VectorField) -> f64 {
        let n = self.grid.dim as f64;
        match field {
            VectorField::T => self.integrate(|s, t, _, _, kt| kt * kt * rho(s, t).powf(l)),
            VectorField::X(_) | VectorField::Y(_) => {
                self.integrate(|s, t, _, ks, kt| (ks * ks / (2.0 * n) + s * s * kt * kt / (8.0 * n)) * rho(s, t).powf(l))
            }
        }
    }
}

fn check_order(l: f64) -> Result<()> {
    if l < 0.0 || (2.0 * l).fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("l must be a nonnegative half-integer, got {l}")));
    }
    Ok(())
}

fn rho(s: f64, t: f64) -> f64 {
    s.powi(4) + t * t
}

/// `∫ |T_Mψ_r|² ρ^l dz dt` for a radial multiplier, `ρ(z,t) = |z|⁴ + t²`.
pub fn kernel_moment(m: &RadialMultiplier, r: f64, l: f64, grid: &KernelGrid) -> Result<f64> {
    check_order(l)?;
    grid.check(r)?;
    if matches!(m, RadialMultiplier::Zero) {
        return Ok(0.0);
    }
    Ok(RadialTable::build(m, KernelKind::Psi, r, grid)?.moment(l))
}

/// `∫ |V T_Mψ_r|² ρ^l dz dt` for `V ∈ {T, X_j, Y_j}`, `0 < r < 1`.
///
/// For radial kernels the angular average of `|X_jK|²` (and `|Y_jK|²`) is
/// `|∂_sK|²/(2n) + s²|∂_tK|²/(8n)`.
pub fn gradient_kernel_moment(m: &RadialMultiplier, r: f64, l: f64, field: VectorField, grid: &KernelGrid) -> Result<f64> {
    if !(0.0 < r && r < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < r < 1, got {r}")));
    }
    check_order(l)?;
    grid.check(r)?;
    if let VectorField::X(j) | VectorField::Y(j) = field {
        if j >= grid.dim {
            return Err(Error::InvalidArgument(format!("coordinate {j} out of range")));
        }
    }
    if matches!(m, RadialMultiplier::Zero) {
        return Ok(0.0);
    }
    Ok(RadialTable::build(m, KernelKind::Psi, r, grid)?.gradient_moment(l, field))
}

/// `∫ |φ_r| (1 + ρ/scale)^η dz dt` for the approximate identity itself.
pub fn weighted_l1_moment(r: f64, eta: f64, scale: f64, grid: &KernelGrid) -> Result<f64> {
    let table = RadialTable::build(&RadialMultiplier::Identity, KernelKind::Phi, r, grid)?;
    Ok(table.integrate(|s, t, k, _, _| k.abs() * (1.0 + rho(s, t) / scale).powf(eta)))
}

/// Least-squares slope of `log y` against `log x`, optionally dropping the two extreme points.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
}

pub fn fit_log_slope(x: &[f64], y: &[f64], drop_extremes: bool) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(&a, &b)| (a, b)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if drop_extremes {
        if pts.len() < 5 {
            return Err(Error::InvalidArgument("dropping extremes needs at least 5 points".into()));
        }
        pts = pts[1..pts.len() - 1].to_vec();
    }
    if pts.len() < 2 || pts.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(Error::InvalidArgument("need at least two positive points".into()));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx, points_used: pts.len() })
}

/// The symbol of `ψ_r` on `P_k(λ)`: `e^{−r(2k+n)|λ|} − e^{−2r(2k+n)|λ|}`.
pub fn psi_symbol(n: usize, r: f64) -> HermiteSymbol {
    HermiteSymbol::spectral(n, format!("psi(r={r})"), move |x| b_function(2.0 * r, x, 0), move |x| b_function(2.0 * r, x, 1))
}

/// One level of the operator-norm sweep.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeLevel {
    pub level: u32,
    pub opnorm: f64,
    /// `opnorm · 2^{N(l + (|α|+|β|)/2)}`, an estimate of `g(r2^N)`.
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub l: usize,
    pub r: f64,
    pub levels: Vec<EnvelopeLevel>,
    /// `opnorm(N+1)/opnorm(N)` for consecutive nonempty levels with `r2^N ≥ 4`.
    pub decay_ratios: Vec<(u32, f64)>,
    /// `2^{−(l + (|α|+|β|)/2)} · 1.5`.
    pub ratio_bound: f64,
    pub pass: bool,
}

/// `max_λ λ^{−(|α|+|β|)/2} ‖χ_N δ^α δ̄^β Γ^l(ψ_r)(H(λ))‖_op` over `N`, with `Γ^l` the
/// diagonal form of `W_λ(∂_λ^l ψ_r^λ)`. Only modes interior to the truncation enter `χ_N`.
pub fn lemma_4_4_envelope(
    alpha: &[usize],
    beta: &[usize],
    l: usize,
    r: f64,
    levels: std::ops::RangeInclusive<u32>,
    grid: &LambdaGrid,
    basis: &Arc<TruncatedBasis>,
) -> Result<EnvelopeReport> {
    let n = basis.dim();
    let order: usize = alpha.iter().chain(beta).sum();
    let mut sym = psi_symbol(n, r);
    for _ in 0..l {
        sym = gamma_symbol(&sym, n);
    }
    let positive: Vec<f64> = grid.nodes.iter().copied().filter(|&x| x > 0.0).collect();
    let mats: Vec<OperatorMatrix> = positive
        .par_iter()
        .map(|&lam| {
            let base = hermite_multiplier(&sym, lam, basis);
            Ok(&delta_power(alpha, beta, &base)? * lam.powf(-(order as f64) / 2.0))
        })
        .collect::<Result<_>>()?;
    let exponent = l as f64 + order as f64 / 2.0;
    let mut out = Vec::new();
    for level in levels {
        let mut best = 0.0f64;
        for (m, &lam) in mats.iter().zip(&positive) {
            let interior = m.interior();
            let keep: Vec<usize> = interior.iter().copied().filter(|&i| in_dyadic_band(level, basis.degree(i), n, lam)).collect();
            if keep.is_empty() {
                continue;
            }
            // χ_N on the left keeps only the rows in the band
            let rows = DMatrix::from_fn(keep.len(), interior.len(), |a, c| m.entries()[(keep[a], interior[c])]);
            let sv = rows.singular_values();
            best = best.max(sv.iter().copied().fold(0.0, f64::max));
        }
        out.push(EnvelopeLevel { level, opnorm: best, envelope: best * 2f64.powf(level as f64 * exponent) });
    }
    let ratio_bound = 2f64.powf(-exponent) * 1.5;
    let mut decay_ratios = Vec::new();
    for w in out.windows(2) {
        if r * 2f64.powi(w[0].level as i32) >= 4.0 && w[0].opnorm > 0.0 && w[1].opnorm > 0.0 {
            decay_ratios.push((w[0].level, w[1].opnorm / w[0].opnorm));
        }
    }
    let pass = !decay_ratios.is_empty() && decay_ratios.iter().all(|(_, q)| *q <= ratio_bound);
    Ok(EnvelopeReport { alpha: alpha.to_vec(), beta: beta.to_vec(), l, r, levels: out, decay_ratios, ratio_bound, pass })
}

/// `max_k |e^{−r(2k+n)λ} − e^{−2r(2k+n)λ}|` over the band `χ_N(λ)`, the zero-order envelope value.
pub fn psi_band_max(r: f64, level: u32, lambda: f64, basis: &TruncatedBasis) -> f64 {
    let n = basis.dim();
    (0..=basis.cutoff())
        .filter(|&k| in_dyadic_band(level, k, n, lambda))
        .map(|k| b_function(2.0 * r, (2 * k + n) as f64 * lambda, 0).abs())
        .fold(0.0, f64::max)
}

/// `‖ψ_r‖²_{L²}` through Plancherel: `(2π)^{−n−1} ∫ Σ_k C(k+n−1,k) b_{2r}((2k+n)|λ|)² |λ|^n dλ`.
pub fn psi_l2_by_plancherel(r: f64, n: usize, grid: &KernelGrid) -> f64 {
    let dl = grid.dlambda();
    let mut total = 0.0;
    for i in 0..grid.lambda_nodes {
        let l = (i as f64 + 0.5) * dl;
        let mut s = 0.0;
        let mut k = 0usize;
        loop {
            let e = (2 * k + n) as f64 * l;
            let v = b_function(2.0 * r, e, 0);
            s += crate::hermite::binomial(k + n - 1, k) * v * v;
            if r * e > 60.0 {
                break;
            }
            k += 1;
        }
        total += s * l.powi(n as i32);
    }
    // both signs of λ
    2.0 * total * dl * (2.0 * PI).powi(-(n as i32) - 1)
}

/// `∫ |φ_r(x·x₀⁻¹) − φ_r(x)| dx` for `n = 1`, on a `(2m+1)³` box grid of half-widths
/// `(S, S, T)` taken from the table, with `φ_r` bilinearly interpolated from its radial table.
pub fn translation_l1_defect(table: &RadialTable, x0: &crate::HPoint, half_points: usize) -> Result<f64> {
    if table.grid.dim != 1 || x0.dim() != 1 {
        return Err(Error::Unsupported("the translation defect is tabulated for n = 1 only".into()));
    }
    let (s_max, t_max) = (table.grid.s_max, table.grid.t_max);
    let m = half_points as i64;
    let (hx, ht) = (s_max / m as f64, t_max / m as f64);
    let (a, b, t0) = (x0.z[0].re, x0.z[0].im, x0.t);
    let total: f64 = (-m..=m)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * hx;
            let mut acc = 0.0;
            for j in -m..=m {
                let y = j as f64 * hx;
                let s = (x * x + y * y).sqrt();
                let (dx, dy) = (x - a, y - b);
                let s_shift = (dx * dx + dy * dy).sqrt();
                // t-coordinate of (z,t)(z₀,t₀)⁻¹ is t − t₀ + ½Im(z·(−z̄₀)) = t − t₀ − ½(y a − x b)
                let twist = -0.5 * (y * a - x * b);
                for k in -m..=m {
                    let t = k as f64 * ht;
                    acc += (table.interpolate(s_shift, t - t0 + twist) - table.interpolate(s, t)).abs();
                }
            }
            acc
        })
        .sum();
    Ok(total * hx * hx * ht)
}
