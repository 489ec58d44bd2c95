//! Noncommutative derivations `δ_j`, `δ̄_j`, the operator `Θ`, and the
//! derivative identities that tie them to multiplication by `t` and `z`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridFunction, ZSamples};
use crate::hermite::{dyadic_projection, ladder_matrix, xi_grad_matrix, Ladder, OperatorMatrix, TruncatedBasis};
use crate::weyl::{inverse_weyl_with_tolerance, weyl_transform, LambdaGrid, MultiplierFamily, SmoothFamily};

/// `δ_j(λ)m = |λ|^{−1/2}[m, A_j(λ)]`.
pub fn delta(j: usize, m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let a = ladder_matrix(j, m.lambda(), Ladder::Annihilation, m.basis())?;
    Ok(&m.commutator(&a) * m.lambda().abs().powf(-0.5))
}

/// `δ̄_j(λ)m = |λ|^{−1/2}[A_j*(λ), m]`.
pub fn delta_bar(j: usize, m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let ad = ladder_matrix(j, m.lambda(), Ladder::Creation, m.basis())?;
    Ok(&ad.commutator(m) * m.lambda().abs().powf(-0.5))
}

/// `δ̄^β δ^α m`: every `δ` factor (coordinates in order) first, then every `δ̄` factor.
pub fn delta_power(alpha: &[usize], beta: &[usize], m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let n = m.basis().dim();
    if alpha.len() != n || beta.len() != n {
        return Err(Error::InvalidArgument("multi-index length differs from the dimension".into()));
    }
    let order: usize = alpha.iter().chain(beta).sum();
    if m.band() + order > m.basis().cutoff() {
        return Err(Error::TruncationOverflow(format!(
            "band {} plus derivation order {order} exceeds the cutoff {}",
            m.band(),
            m.basis().cutoff()
        )));
    }
    let mut out = m.clone();
    for (j, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            out = delta(j, &out)?;
        }
    }
    for (j, &b) in beta.iter().enumerate() {
        for _ in 0..b {
            out = delta_bar(j, &out)?;
        }
    }
    Ok(out)
}

/// Which of the two `Θ` expressions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaForm {
    /// `∂m − (1/2λ)[m, ξ·∇] + (1/(2λ√λ)) Σ_j (δ_j m A_j* + δ̄_j m A_j)`, with `∂` the entrywise λ-derivative.
    Printed,
    /// `∂m + (1/(4λ√λ)) Σ_j (δ_j m A_j* + δ̄_j m A_j)`; this is the form with
    /// `(itf)^ = Θ f̂` and the one matching the coefficient calculus on V-expansions.
    Consistent,
}

fn is_diagonal(m: &OperatorMatrix) -> bool {
    let e = m.entries();
    (0..e.nrows()).all(|r| (0..e.ncols()).all(|c| r == c || e[(r, c)].norm() == 0.0))
}

/// `Θ(λ)m` from a value `m` and its entrywise derivative `dm`, `λ > 0`.
pub fn theta_from_parts(m: &OperatorMatrix, dm: &OperatorMatrix, form: ThetaForm) -> Result<OperatorMatrix> {
    let lam = m.lambda();
    if lam <= 0.0 {
        return Err(Error::Unsupported("theta is defined here for lambda > 0 only".into()));
    }
    let b = m.basis();
    let mut corr = OperatorMatrix::zeros(b, lam);
    for j in 0..b.dim() {
        let a = ladder_matrix(j, lam, Ladder::Annihilation, b)?;
        let ad = ladder_matrix(j, lam, Ladder::Creation, b)?;
        corr = &corr + &(&(&delta(j, m)? * &ad) + &(&delta_bar(j, m)? * &a));
    }
    let band = m.band().max(dm.band()) + if is_diagonal(m) && is_diagonal(dm) { 1 } else { 2 };
    let out = match form {
        ThetaForm::Consistent => dm + &(&corr * (1.0 / (4.0 * lam * lam.sqrt()))),
        ThetaForm::Printed => {
            let xg = xi_grad_matrix(lam, b);
            let c = m.commutator(&xg);
            &(dm - &(&c * (1.0 / (2.0 * lam)))) + &(&corr * (1.0 / (2.0 * lam * lam.sqrt())))
        }
    };
    Ok(out.with_band(band))
}

/// Fourth-order central difference of a family's entries at `λ` with step `h`.
pub fn family_derivative_fd(fam: &dyn SmoothFamily, lambda: f64, h: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    let p1 = fam.at(lambda + h, basis);
    let m1 = fam.at(lambda - h, basis);
    let p2 = fam.at(lambda + 2.0 * h, basis);
    let m2 = fam.at(lambda - 2.0 * h, basis);
    let e = (p1.entries() - m1.entries()) * Complex64::new(8.0, 0.0) - (p2.entries() - m2.entries());
    let band = p1.band().max(m1.band()).max(p2.band()).max(m2.band());
    OperatorMatrix::new(basis.clone(), lambda, e / Complex64::new(12.0 * h, 0.0), band).expect("finite difference")
}

/// Relative step used when a family has no analytic derivative.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-3;

/// `Θ(λ)` of a smooth family; uses the analytic derivative when available.
pub fn theta_smooth(fam: &dyn SmoothFamily, lambda: f64, basis: &Arc<TruncatedBasis>, form: ThetaForm) -> Result<OperatorMatrix> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("theta is defined here for lambda > 0 only".into()));
    }
    let m = fam.at(lambda, basis);
    let dm = match fam.derivative(lambda, basis) {
        Some(d) => d,
        None => family_derivative_fd(fam, lambda, DEFAULT_RELATIVE_STEP * lambda, basis),
    };
    theta_from_parts(&m, &dm, form)
}

/// `Θ(λ)M(λ)` at grid node `idx`: analytic derivative if stored, else a
/// three-point difference over the neighbouring nodes.
pub fn theta(fam: &MultiplierFamily, idx: usize, form: ThetaForm) -> Result<OperatorMatrix> {
    let lam = fam.grid.nodes[idx];
    if lam <= 0.0 {
        return Err(Error::Unsupported("theta is defined here for lambda > 0 only".into()));
    }
    let dm = match &fam.d_lambda {
        Some(d) => d[idx].clone(),
        None => {
            if idx == 0 || idx + 1 >= fam.grid.len() || fam.grid.nodes[idx - 1] <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "lambda = {lam} is an edge node and the family has no analytic derivative"
                )));
            }
            let (l0, l2) = (fam.grid.nodes[idx - 1], fam.grid.nodes[idx + 1]);
            let (h0, h1) = (lam - l0, l2 - lam);
            let c0 = -h1 / (h0 * (h0 + h1));
            let c1 = (h1 - h0) / (h0 * h1);
            let c2 = h0 / (h1 * (h0 + h1));
            let e = fam.matrices[idx - 1].entries() * Complex64::new(c0, 0.0)
                + fam.matrices[idx].entries() * Complex64::new(c1, 0.0)
                + fam.matrices[idx + 1].entries() * Complex64::new(c2, 0.0);
            OperatorMatrix::new(fam.basis.clone(), lam, e, fam.matrices[idx].band())?
        }
    };
    theta_from_parts(&fam.matrices[idx], &dm, form)
}

/// `Θ^s` applied to a smooth family; inner derivatives by finite differences.
pub struct ThetaPower<'a> {
    pub inner: &'a dyn SmoothFamily,
    pub s: usize,
    pub form: ThetaForm,
}

impl SmoothFamily for ThetaPower<'_> {
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
        if self.s == 0 {
            return self.inner.at(lambda, basis);
        }
        let lower = ThetaPower { inner: self.inner, s: self.s - 1, form: self.form };
        theta_smooth(&lower, lambda, basis, self.form).expect("theta on positive lambda")
    }

    fn derivative(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> Option<OperatorMatrix> {
        if self.s == 0 {
            self.inner.derivative(lambda, basis)
        } else {
            None
        }
    }

    fn is_diagonal(&self) -> bool {
        self.inner.is_diagonal()
    }
}

/// `f̂(λ) = W_λ(f^λ)` of a grid function, evaluable at any `λ`.
pub struct FourierFamily<'a> {
    pub f: &'a GridFunction,
}

impl SmoothFamily for FourierFamily<'_> {
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
        weyl_transform(&self.f.lambda_slice(lambda), lambda, basis).expect("weyl transform").value
    }
}

/// Outcome of comparing `(itf)^(λ)` with `Θ(λ)f̂(λ)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaTransformReport {
    pub form: ThetaForm,
    /// Least-squares `c` in `(itf)^ ≈ c·Θf̂` over all λ.
    pub constant: Complex64,
    /// `‖(itf)^ − cΘf̂‖ / ‖(itf)^‖` on interior modes.
    pub deviation: f64,
    /// Per-λ best-fit constants.
    pub per_lambda: Vec<(f64, Complex64)>,
    pub inconclusive: bool,
}

/// Fits `(itf)^(λ) = c·Θ(λ)f̂(λ)` over the given positive `λ`.
pub fn verify_theorem_4_2(
    f: &GridFunction,
    lambdas: &[f64],
    basis: &Arc<TruncatedBasis>,
    form: ThetaForm,
) -> Result<ThetaTransformReport> {
    let tf = GridFunction {
        zgrid: f.zgrid.clone(),
        tgrid: f.tgrid,
        values: (0..f.len()).map(|k| Complex64::new(0.0, f.tgrid.node(k % f.tgrid.count)) * f.values[k]).collect(),
    };
    let fam = FourierFamily { f };
    let pairs: Vec<(OperatorMatrix, OperatorMatrix)> = lambdas
        .par_iter()
        .map(|&l| -> Result<_> {
            let lhs = weyl_transform(&tf.lambda_slice(l), l, basis)?.value;
            let rhs = theta_smooth(&fam, l, basis, form)?;
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let band = pairs.iter().map(|(_, r)| r.band()).max().unwrap_or(0);
    let idx = basis.interior(band);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    let mut lhs_norm = 0.0;
    let mut per_lambda = Vec::new();
    for ((lhs, rhs), &l) in pairs.iter().zip(lambdas) {
        let a = lhs.block(&idx);
        let b = rhs.block(&idx);
        let n_l: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
        let d_l: f64 = b.iter().map(|x| x.norm_sqr()).sum();
        per_lambda.push((l, if d_l > 0.0 { n_l / d_l } else { Complex64::new(0.0, 0.0) }));
        num += n_l;
        den += d_l;
        lhs_norm += a.iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    if den < 1e-24 || lhs_norm < 1e-24 {
        return Ok(ThetaTransformReport {
            form,
            constant: Complex64::new(0.0, 0.0),
            deviation: 0.0,
            per_lambda,
            inconclusive: true,
        });
    }
    let c = num / den;
    let mut resid = 0.0;
    for (lhs, rhs) in &pairs {
        let a = lhs.block(&idx);
        let b = rhs.block(&idx);
        resid += a.iter().zip(b.iter()).map(|(x, y)| (x - c * y).norm_sqr()).sum::<f64>();
    }
    Ok(ThetaTransformReport { form, constant: c, deviation: (resid / lhs_norm).sqrt(), per_lambda, inconclusive: false })
}

/// Residuals of the first-order derivative identity for `T^λ_{m(λ)}h` at one `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeIdentityReport {
    pub lambda: f64,
    pub step: f64,
    /// `sup|d/dλ T h − RHS|` with the consistent right side, relative to `sup|d/dλ T h|`.
    pub consistent: f64,
    /// Same with the printed right side.
    pub printed: f64,
    pub scale: f64,
}

fn t_apply(m: &OperatorMatrix, h: &ZSamples) -> Result<ZSamples> {
    let w = weyl_transform(h, m.lambda(), m.basis())?.value;
    Ok(inverse_weyl_with_tolerance(&(m * &w), f64::INFINITY)?.sample(&h.grid))
}

/// Compares a central difference of `λ ↦ T^λ_{m(λ)}h` (h fixed) with
/// `T_{Θm}h + (i/(4√λ))Σ_j(T_{δ_j m}(z̄_j h) − T_{δ̄_j m}(z_j h))`
/// and with the printed `T_{Θm}h + Σ_j λ^{−1/2}(T_{δ_j m}(z_j h) − λ^{−1/2}T_{δ̄_j m}(z̄_j h))`.
pub fn verify_lemma_2_2_k1(
    fam: &dyn SmoothFamily,
    h: &ZSamples,
    lambda: f64,
    step: f64,
    basis: &Arc<TruncatedBasis>,
) -> Result<DerivativeIdentityReport> {
    if lambda <= 0.0 || step <= 0.0 || step >= lambda {
        return Err(Error::InvalidArgument(format!("need 0 < step < lambda, got {step}, {lambda}")));
    }
    let g = |l: f64| t_apply(&fam.at(l, basis), h);
    let gp = g(lambda + step)?;
    let gm = g(lambda - step)?;
    let lhs: Vec<Complex64> = gp.values.iter().zip(&gm.values).map(|(a, b)| (a - b) / (2.0 * step)).collect();
    let m = fam.at(lambda, basis);
    let n = basis.dim();
    let zmul = |j: usize, conj: bool| {
        ZSamples {
            grid: h.grid.clone(),
            values: (0..h.grid.len())
                .map(|i| {
                    let z = h.grid.point(i)[j];
                    h.values[i] * if conj { z.conj() } else { z }
                })
                .collect(),
        }
    };
    let rhs_with = |form: ThetaForm| -> Result<Vec<Complex64>> {
        let th = theta_smooth(fam, lambda, basis, form)?;
        let mut acc = t_apply(&th, h)?.values;
        for j in 0..n {
            let dm = delta(j, &m)?;
            let dbm = delta_bar(j, &m)?;
            let (a, b, ca, cb) = match form {
                ThetaForm::Consistent => (
                    t_apply(&dm, &zmul(j, true))?,
                    t_apply(&dbm, &zmul(j, false))?,
                    Complex64::new(0.0, 0.25 / lambda.sqrt()),
                    Complex64::new(0.0, -0.25 / lambda.sqrt()),
                ),
                ThetaForm::Printed => (
                    t_apply(&dm, &zmul(j, false))?,
                    t_apply(&dbm, &zmul(j, true))?,
                    Complex64::new(1.0 / lambda.sqrt(), 0.0),
                    Complex64::new(-1.0 / lambda, 0.0),
                ),
            };
            for i in 0..acc.len() {
                acc[i] += ca * a.values[i] + cb * b.values[i];
            }
        }
        Ok(acc)
    };
    let scale = lhs.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let err = |r: &[Complex64]| lhs.iter().zip(r).fold(0.0f64, |a, (x, y)| a.max((x - y).norm())) / scale.max(1e-300);
    Ok(DerivativeIdentityReport {
        lambda,
        step,
        consistent: err(&rhs_with(ThetaForm::Consistent)?),
        printed: err(&rhs_with(ThetaForm::Printed)?),
        scale,
    })
}

/// Orders `α`, `β` (derivations) and `s` (powers of `Θ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationRequest {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub s: usize,
}

impl DerivationRequest {
    pub fn new(alpha: Vec<usize>, beta: Vec<usize>, s: usize) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(Error::InvalidArgument("alpha and beta need the same nonzero length".into()));
        }
        let r = DerivationRequest { alpha, beta, s };
        let max = Self::default_max_order(r.alpha.len());
        if r.order() > max {
            return Err(Error::InvalidArgument(format!("order {} exceeds the default range {max}", r.order())));
        }
        Ok(r)
    }

    /// `l = |α| + |β| + 2s`.
    pub fn order(&self) -> usize {
        self.alpha.iter().chain(&self.beta).sum::<usize>() + 2 * self.s
    }

    /// `2⌈(n+3)/2⌉`.
    pub fn default_max_order(n: usize) -> usize {
        2 * (n + 3).div_ceil(2)
    }
}

/// Value of the hypothesis functional at one dyadic level `N`.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisValue {
    pub level: u32,
    pub value: f64,
    /// Set when `χ_N(λ)` vanishes on every grid node.
    pub empty_band: bool,
}

/// `2^{N(l−n−1)} ∫_{λ>0} ‖λ^{−(|α|+|β|)/2} δ^α δ̄^β Θ^s M(λ) χ_N(λ)‖²_HS λ^n dλ`.
pub fn hypothesis_functional(
    fam: &dyn SmoothFamily,
    req: &DerivationRequest,
    level: u32,
    grid: &LambdaGrid,
    basis: &Arc<TruncatedBasis>,
    form: ThetaForm,
) -> Result<HypothesisValue> {
    let n = basis.dim() as i32;
    let deriv: usize = req.alpha.iter().chain(&req.beta).sum();
    let top = ThetaPower { inner: fam, s: req.s, form };
    let top: &dyn SmoothFamily = &top;
    let mut any = false;
    let terms: Vec<(f64, bool)> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .filter(|(l, _)| **l > 0.0)
        .map(|(&l, &w)| -> Result<(f64, bool)> {
            let chi = dyadic_projection(level, l, basis);
            if chi.max_abs() == 0.0 {
                return Ok((0.0, false));
            }
            let d = &delta_power(&req.alpha, &req.beta, &top.at(l, basis))? * &chi;
            let v = d.hs_norm().powi(2) * l.powf(-(deriv as f64)) * l.powi(n) * w;
            Ok((v, true))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (v, nonempty) in terms {
        total += v;
        any |= nonempty;
    }
    let factor = 2f64.powf(level as f64 * (req.order() as f64 - n as f64 - 1.0));
    Ok(HypothesisValue { level, value: factor * total, empty_band: !any })
}

/// Direct count of the same functional for `M = I`, `l = 0`:
/// `2^{−N(n+1)} Σ_λ w_λ λ^n #{μ : 2^N ≤ (2|μ|+n)λ < 2^{N+1}, |μ| ≤ K}`.
pub fn identity_functional_by_counting(level: u32, grid: &LambdaGrid, basis: &TruncatedBasis) -> f64 {
    let n = basis.dim();
    let mut total = 0.0;
    for (&l, &w) in grid.nodes.iter().zip(&grid.weights) {
        if l <= 0.0 {
            continue;
        }
        let count: f64 = (0..=basis.cutoff())
            .filter(|&k| crate::hermite::in_dyadic_band(level, k, n, l))
            .map(|k| crate::hermite::binomial(k + n - 1, k))
            .sum();
        total += w * l.powi(n as i32) * count;
    }
    total * 2f64.powf(-(level as f64) * (n as f64 + 1.0))
}
