use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::space::DiscreteSpace;
use crate::error::{Error, Result};

/// A bounded function on `[0, ∞)`.
#[derive(Clone)]
pub struct SymbolFunction {
    pub label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SymbolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolFunction({})", self.label)
    }
}

impl SymbolFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SymbolFunction { label: label.into(), f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    pub fn identity() -> Self {
        Self::new("x", |x| x)
    }

    /// `e^{−tx}`.
    pub fn heat(t: f64) -> Self {
        Self::new(format!("exp(-{t}x)"), move |x| (-t * x).exp())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn product(&self, other: &SymbolFunction) -> Self {
        let (a, b) = (self.f.clone(), other.f.clone());
        Self::new(format!("({})*({})", self.label, other.label), move |x| a(x) * b(x))
    }

    /// `δ_tF(λ) = F(tλ)`.
    pub fn dilate(&self, t: f64) -> Self {
        let a = self.f.clone();
        Self::new(format!("({})(t={t})", self.label), move |x| a(t * x))
    }

    /// `λ ↦ F(λ^{1/m})`, so that applying it to `L` gives `F(L^{1/m})`.
    pub fn root(&self, m: f64) -> Self {
        let a = self.f.clone();
        Self::new(format!("({})(x^(1/{m}))", self.label), move |x| a(x.max(0.0).powf(1.0 / m)))
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

/// `F(L)` as an operator matrix acting on point values.
pub fn spectral_multiplier(space: &DiscreteSpace, f: &SymbolFunction) -> DMatrix<f64> {
    let u = &space.eigenvectors;
    let vals: Vec<f64> = space.eigenvalues.iter().map(|&l| f.eval(l)).collect();
    let mut scaled = u.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= vals[k];
    }
    let sym = scaled * u.transpose();
    let mu = &space.measure;
    DMatrix::from_fn(space.len(), space.len(), |i, j| sym[(i, j)] * (mu[j] / mu[i]).sqrt())
}

/// `F(L^{1/m})`.
pub fn spectral_multiplier_root(space: &DiscreteSpace, f: &SymbolFunction, m: f64) -> Result<DMatrix<f64>> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("root order must be positive, got {m}")));
    }
    Ok(spectral_multiplier(space, &f.root(m)))
}

/// `e^{−tL}` as an operator matrix.
pub fn heat_kernel(space: &DiscreteSpace, t: f64) -> Result<DMatrix<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("heat time must be positive, got {t}")));
    }
    Ok(spectral_multiplier(space, &SymbolFunction::heat(t)))
}

/// The kernel of an operator matrix with respect to `μ`: `K(x,y) = A(x,y)/μ(y)`.
pub fn kernel_density(space: &DiscreteSpace, op: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(op.nrows(), op.ncols(), |i, j| op[(i, j)] / space.measure[j])
}

/// Fit of `|p_t(x,y)| ≤ C/μ(B(x, t^{1/m})) · exp(−d^{m/(m−1)}/(c t^{1/(m−1)}))`.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianFit {
    pub m: f64,
    pub c: f64,
    /// Smallest `C` making the bound hold on every pair and every `t`.
    pub big_c: f64,
    /// RMS relative error of the least-squares model on the fitted pairs.
    pub residual: f64,
    pub fitted_pairs: usize,
    pub times: Vec<f64>,
}

/// Fits `(C, c, m)` over the given times. Pairs with `p_t(x,y) ≥ floor·p_t(x,x)` enter the
/// least-squares fit; the reported `C` covers every pair above the rounding level of the
/// eigensolver.
pub fn fit_gaussian_bound(space: &DiscreteSpace, times: &[f64], floor: f64) -> Result<GaussianFit> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("need at least one time".into()));
    }
    let n = space.len();
    let kernels: Vec<DMatrix<f64>> = times.iter().map(|&t| heat_kernel(space, t).map(|p| kernel_density(space, &p))).collect::<Result<_>>()?;
    let model = |m: f64| {
        // rows: (log(p·μ(B)), feature, t index, x, y)
        let mut data = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let p = &kernels[k];
            for x in 0..n {
                let vb = space.ball_measure(x, t.powf(1.0 / m)).max(space.measure[x]);
                let diag = p[(x, x)];
                for y in 0..n {
                    let v = p[(x, y)].abs();
                    if v >= floor * diag && v > 0.0 {
                        let d = space.distance[(x, y)];
                        data.push(((v * vb).ln(), d.powf(m / (m - 1.0)) / t.powf(1.0 / (m - 1.0))));
                    }
                }
            }
        }
        let k = data.len() as f64;
        let (mx, my) = (data.iter().map(|d| d.1).sum::<f64>() / k, data.iter().map(|d| d.0).sum::<f64>() / k);
        let sxx: f64 = data.iter().map(|d| (d.1 - mx).powi(2)).sum();
        let sxy: f64 = data.iter().map(|d| (d.1 - mx) * (d.0 - my)).sum();
        let b = if sxx > 0.0 { -sxy / sxx } else { 0.0 };
        let a = my + b * mx;
        let res = (data.iter().map(|d| ((a - b * d.1 - d.0).exp() - 1.0).powi(2)).sum::<f64>() / k).sqrt();
        (res, a, b, data.len())
    };
    let mut best: Option<(f64, f64, f64, f64, usize)> = None;
    let mut m = 1.1;
    while m <= 6.0 + 1e-9 {
        let (res, a, b, cnt) = model(m);
        if b > 0.0 && best.map_or(true, |bb| res < bb.0) {
            best = Some((res, m, a, b, cnt));
        }
        m += 0.05;
    }
    let (residual, m, _, b, fitted_pairs) =
        best.ok_or_else(|| Error::InvalidArgument("no decaying Gaussian model fits these kernels".into()))?;
    let c = 1.0 / b;
    // entries below the eigensolver's rounding level carry no information
    let mut log_c = f64::NEG_INFINITY;
    for (k, &t) in times.iter().enumerate() {
        let noise = 1e-12 * kernels[k].amax();
        for x in 0..n {
            let vb = space.ball_measure(x, t.powf(1.0 / m)).max(space.measure[x]);
            for y in 0..n {
                let v = kernels[k][(x, y)].abs();
                if v <= noise {
                    continue;
                }
                let d = space.distance[(x, y)];
                let e = d.powf(m / (m - 1.0)) / (c * t.powf(1.0 / (m - 1.0)));
                log_c = log_c.max(v.ln() + vb.ln() + e);
            }
        }
    }
    let big_c = log_c.exp();
    Ok(GaussianFit { m, c, big_c, residual, fitted_pairs, times: times.to_vec() })
}
