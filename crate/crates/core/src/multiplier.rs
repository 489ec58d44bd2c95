//! Hermite multipliers `a(H(λ))`, finite differences in the Hermite index,
//! partial isometries `V_α^m(λ)` and the coefficient calculus on their expansions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::derivations::{delta_power, ThetaForm};
use crate::error::{Error, Result};
use crate::hermite::{ladder_matrix, CMatrix, Ladder, OperatorMatrix, TruncatedBasis};
use crate::weyl::SmoothFamily;

type SymbolFn = dyn Fn(usize, f64) -> Complex64 + Send + Sync;

/// A symbol `a(k, λ)` on `ℕ × ℝ*`, optionally with `∂_λ a`.
#[derive(Clone)]
pub struct HermiteSymbol {
    pub label: String,
    value: Arc<SymbolFn>,
    d_lambda: Option<Arc<SymbolFn>>,
}

impl fmt::Debug for HermiteSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermiteSymbol").field("label", &self.label).finish()
    }
}

impl HermiteSymbol {
    pub fn new(label: impl Into<String>, value: impl Fn(usize, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        HermiteSymbol { label: label.into(), value: Arc::new(value), d_lambda: None }
    }

    pub fn with_derivative(mut self, d: impl Fn(usize, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.d_lambda = Some(Arc::new(d));
        self
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new("constant", move |_, _| c).with_derivative(|_, _| Complex64::new(0.0, 0.0))
    }

    /// `(2k+n)|λ|`, the eigenvalue of `H(λ)` on `P_k`.
    pub fn eigenvalue(n: usize) -> Self {
        Self::new("eigenvalue", move |k, l| Complex64::new((2 * k + n) as f64 * l.abs(), 0.0))
            .with_derivative(move |k, l| Complex64::new((2 * k + n) as f64 * l.signum(), 0.0))
    }

    /// `b((2k+n)|λ|)` for a function `b` with derivative `db`.
    pub fn spectral(
        n: usize,
        label: impl Into<String>,
        b: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        db: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let e = move |k: usize, l: f64| (2 * k + n) as f64 * l.abs();
        Self::new(label, move |k, l| Complex64::new(b(e(k, l)), 0.0))
            .with_derivative(move |k, l| Complex64::new(db(e(k, l)) * (2 * k + n) as f64 * l.signum(), 0.0))
    }

    /// `e^{−2r(2k+n)|λ|}`.
    pub fn heat(n: usize, r: f64) -> Self {
        Self::spectral(n, format!("heat(r={r})"), move |x| (-2.0 * r * x).exp(), move |x| -2.0 * r * (-2.0 * r * x).exp())
    }

    pub fn eval(&self, k: usize, lambda: f64) -> Complex64 {
        (self.value)(k, lambda)
    }

    pub fn eval_d_lambda(&self, k: usize, lambda: f64) -> Option<Complex64> {
        self.d_lambda.as_ref().map(|d| d(k, lambda))
    }
}

/// `a(H(λ)) = Σ_k a(k, λ) P_k(λ)`.
pub fn hermite_multiplier(sym: &HermiteSymbol, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
    OperatorMatrix::diagonal(basis, lambda, |mu| sym.eval(mu.iter().sum(), lambda))
}

impl SmoothFamily for HermiteSymbol {
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
        hermite_multiplier(self, lambda, basis)
    }

    fn derivative(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> Option<OperatorMatrix> {
        let d = self.d_lambda.as_ref()?;
        Some(OperatorMatrix::diagonal(basis, lambda, |mu| d(mu.iter().sum(), lambda)))
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Difference {
    Forward,
    Backward,
}

/// `Δ₊a(k) = a(k+1) − a(k)` or `Δ₋a(k) = a(k) − a(k−1)` with `Δ₋a(0) = 0`.
pub fn finite_difference(sym: &HermiteSymbol, kind: Difference) -> HermiteSymbol {
    let v = sym.value.clone();
    let dv = sym.d_lambda.clone();
    let label = format!("{}({})", if kind == Difference::Forward { "D+" } else { "D-" }, sym.label);
    let diff = move |f: &SymbolFn, k: usize, l: f64| match kind {
        Difference::Forward => f(k + 1, l) - f(k, l),
        Difference::Backward if k == 0 => Complex64::new(0.0, 0.0),
        Difference::Backward => f(k, l) - f(k - 1, l),
    };
    let out = HermiteSymbol::new(label, move |k, l| diff(v.as_ref(), k, l));
    match dv {
        Some(d) => out.with_derivative(move |k, l| diff(d.as_ref(), k, l)),
        None => out,
    }
}

/// Result of fitting the ladder expansion of `δ^p δ̄^q a(H(λ))`.
#[derive(Debug, Clone, Serialize)]
pub struct LadderExpansionFit {
    pub p: usize,
    pub q: usize,
    pub lambda: f64,
    /// `(r, C_{p,q,r})`.
    pub constants: Vec<(usize, Complex64)>,
    /// Residual relative to `‖δ^p δ̄^q a(H)‖_HS` on interior modes.
    pub residual: f64,
    /// Admissible `r` set empty while the left side is nonzero.
    pub structural_failure: bool,
}

fn matrix_power(m: &OperatorMatrix, k: usize) -> OperatorMatrix {
    let mut out = OperatorMatrix::identity(m.basis(), m.lambda());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Fits `δ^p δ̄^q a(H) = Σ_r C_r λ^{−(q+2r−p)/2} (A*)^{q+r−p} A^r (Δ₋^r Δ₊^q a)(H)`
/// over `0 ≤ r ≤ p ≤ q + r` by least squares (one dimension).
pub fn verify_lemma_2_3(p: usize, q: usize, sym: &HermiteSymbol, lambda: f64, basis: &Arc<TruncatedBasis>) -> Result<LadderExpansionFit> {
    if basis.dim() != 1 {
        return Err(Error::InvalidArgument("the ladder expansion fit is one-dimensional".into()));
    }
    if p > 2 || q > 2 {
        return Err(Error::InvalidArgument("orders above 2 are not supported".into()));
    }
    let lhs = delta_power(&[p], &[q], &hermite_multiplier(sym, lambda, basis))?;
    let a = ladder_matrix(0, lambda, Ladder::Annihilation, basis)?;
    let ad = ladder_matrix(0, lambda, Ladder::Creation, basis)?;
    let rs: Vec<usize> = (0..=p).filter(|&r| p <= q + r).collect();
    let idx = basis.interior(p + q);
    let target = lhs.block(&idx);
    let scale = target.norm();
    if rs.is_empty() {
        return Ok(LadderExpansionFit {
            p,
            q,
            lambda,
            constants: vec![],
            residual: if scale > 0.0 { 1.0 } else { 0.0 },
            structural_failure: scale > 0.0,
        });
    }
    let mut forward = sym.clone();
    for _ in 0..q {
        forward = finite_difference(&forward, Difference::Forward);
    }
    let columns: Vec<CMatrix> = rs
        .iter()
        .map(|&r| {
            let mut s = forward.clone();
            for _ in 0..r {
                s = finite_difference(&s, Difference::Backward);
            }
            let t = &(&matrix_power(&ad, q + r - p) * &matrix_power(&a, r)) * &hermite_multiplier(&s, lambda, basis);
            (&t * lambda.powf(-((q + 2 * r - p) as f64) / 2.0)).block(&idx)
        })
        .collect();
    let rows = target.len();
    let design = DMatrix::from_fn(rows, columns.len(), |i, c| columns[c][i]);
    let rhs = DVector::from_iterator(rows, target.iter().copied());
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&rhs, 1e-13).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let resid = (&design * &coef - &rhs).norm();
    Ok(LadderExpansionFit {
        p,
        q,
        lambda,
        constants: rs.into_iter().zip(coef.iter().copied()).collect(),
        residual: if scale > 0.0 { resid / scale } else { resid },
        structural_failure: false,
    })
}

/// `(m, α)` labelling a partial isometry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VIndex {
    pub m: Vec<i64>,
    pub alpha: Vec<usize>,
}

impl VIndex {
    pub fn new(m: Vec<i64>, alpha: Vec<usize>) -> Self {
        VIndex { m, alpha }
    }

    /// Row multi-index `α + m⁻` (for `λ > 0`).
    pub fn row(&self) -> Vec<usize> {
        self.alpha.iter().zip(&self.m).map(|(&a, &m)| a + (-m).max(0) as usize).collect()
    }

    /// Column multi-index `α + m⁺` (for `λ > 0`).
    pub fn col(&self) -> Vec<usize> {
        self.alpha.iter().zip(&self.m).map(|(&a, &m)| a + m.max(0) as usize).collect()
    }

    /// `(−1)^{|m⁺|}`.
    pub fn sign(&self) -> f64 {
        if self.m.iter().map(|&m| m.max(0)).sum::<i64>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The label of `|a⟩⟨b|` up to sign: `m = b − a`, `α = min(a, b)`.
    pub fn from_rank_one(a: &[usize], b: &[usize]) -> Self {
        VIndex {
            m: a.iter().zip(b).map(|(&x, &y)| y as i64 - x as i64).collect(),
            alpha: a.iter().zip(b).map(|(&x, &y)| x.min(y)).collect(),
        }
    }

    fn shift_alpha(&self, j: usize, by: i64) -> Option<VIndex> {
        let a = self.alpha[j] as i64 + by;
        (a >= 0).then(|| {
            let mut out = self.clone();
            out.alpha[j] = a as usize;
            out
        })
    }

    fn shift_m(&self, j: usize, by: i64) -> VIndex {
        let mut out = self.clone();
        out.m[j] += by;
        out
    }
}

/// `V_α^m(λ)`: `Φ_{α+m⁺} ↦ (−1)^{|m⁺|}Φ_{α+m⁻}` for `λ > 0`; the adjoint of `V_α^m(−λ)` for `λ < 0`.
pub fn partial_isometry(m: &[i64], alpha: &[usize], lambda: f64, basis: &Arc<TruncatedBasis>) -> Result<OperatorMatrix> {
    if lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    if m.len() != basis.dim() || alpha.len() != basis.dim() {
        return Err(Error::InvalidArgument("index length differs from the dimension".into()));
    }
    let v = VIndex::new(m.to_vec(), alpha.to_vec());
    let (row, col) = (v.row(), v.col());
    let (r, c) = match (basis.position(&row), basis.position(&col)) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            let degree = row.iter().sum::<usize>().max(col.iter().sum());
            return Err(Error::DegreeOutOfRange { degree, max: basis.cutoff() });
        }
    };
    let mut e = CMatrix::zeros(basis.len(), basis.len());
    if lambda > 0.0 {
        e[(r, c)] = Complex64::new(v.sign(), 0.0);
    } else {
        e[(c, r)] = Complex64::new(v.sign(), 0.0);
    }
    OperatorMatrix::new(basis.clone(), lambda, e, 0)
}

/// A finite expansion `Σ B(m, α) V_α^m(λ)` at one `λ`, with optional `∂_λB`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VExpansion {
    pub terms: BTreeMap<VIndex, Complex64>,
    pub d_lambda: Option<BTreeMap<VIndex, Complex64>>,
}

impl VExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(index: VIndex, b: Complex64) -> Self {
        let mut e = Self::new();
        e.terms.insert(index, b);
        e
    }

    pub fn add(&mut self, index: VIndex, b: Complex64) {
        *self.terms.entry(index).or_insert(Complex64::new(0.0, 0.0)) += b;
    }

    pub fn coefficient(&self, index: &VIndex) -> Complex64 {
        self.terms.get(index).copied().unwrap_or_default()
    }

    fn d_coefficient(&self, index: &VIndex) -> Complex64 {
        self.d_lambda.as_ref().and_then(|d| d.get(index).copied()).unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|b| b.norm() == 0.0)
    }

    /// Drops exact zeros.
    pub fn pruned(mut self) -> Self {
        self.terms.retain(|_, b| b.norm() != 0.0);
        self
    }

    pub fn to_matrix(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> Result<OperatorMatrix> {
        let mut e = CMatrix::zeros(basis.len(), basis.len());
        for (v, b) in &self.terms {
            let vm = partial_isometry(&v.m, &v.alpha, lambda, basis)?;
            e += vm.entries() * *b;
        }
        OperatorMatrix::new(basis.clone(), lambda, e, 0)
    }

    /// Expansion of an arbitrary matrix in the (orthonormal) `V` family; the
    /// inverse of [`Self::to_matrix`] on the truncation.
    pub fn decompose(m: &OperatorMatrix) -> Self {
        let b = m.basis();
        let mut out = VExpansion::new();
        for r in 0..b.len() {
            for c in 0..b.len() {
                let x = m.entries()[(r, c)];
                if x.norm() == 0.0 {
                    continue;
                }
                let (a, bb) = if m.lambda() > 0.0 { (b.index(r), b.index(c)) } else { (b.index(c), b.index(r)) };
                let v = VIndex::from_rank_one(a, bb);
                out.add(v.clone(), x * v.sign());
            }
        }
        out
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn collect_sources(e: &VExpansion, j: usize, shift_m: i64) -> Vec<VIndex> {
    let mut targets: Vec<VIndex> = Vec::new();
    for v in e.terms.keys() {
        let t = v.shift_m(j, shift_m);
        for da in -1..=1 {
            if let Some(x) = t.shift_alpha(j, da) {
                targets.push(x);
            }
        }
    }
    targets.sort();
    targets.dedup();
    targets
}

/// Coefficients of `δ_j(λ)M` for `λ > 0`. Output terms with `m_j ≥ 1` use
/// `√2[√(α_j+1)B(m−e_j, α+e_j) − √(α_j+m_j)B(m−e_j, α)]`, those with `m_j ≤ 0` use
/// `√2[√α_j B(m−e_j, α−e_j) − √(α_j−m_j+1)B(m−e_j, α)]`; each input term is thereby split by sign.
pub fn delta_on_v_expansion(e: &VExpansion, j: usize, lambda: f64) -> Result<VExpansion> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("the coefficient calculus is implemented for lambda > 0".into()));
    }
    let mut out = VExpansion::new();
    for t in collect_sources(e, j, 1) {
        let src = t.shift_m(j, -1);
        let a = t.alpha[j] as f64;
        let mj = t.m[j];
        let c = if mj >= 1 {
            let up = src.shift_alpha(j, 1).map(|s| e.coefficient(&s)).unwrap_or_default();
            (a + 1.0).sqrt() * up - (a + mj as f64).sqrt() * e.coefficient(&src)
        } else {
            let down = src.shift_alpha(j, -1).map(|s| e.coefficient(&s)).unwrap_or_default();
            a.sqrt() * down - (a - mj as f64 + 1.0).sqrt() * e.coefficient(&src)
        };
        if c.norm() != 0.0 {
            out.add(t, c * SQRT2);
        }
    }
    Ok(out)
}

/// Coefficients of `δ̄_j(λ)M` for `λ > 0`. Output terms with `m_j ≥ 0` use
/// `√2[√(α_j+m_j+1)B(m+e_j, α) − √α_j B(m+e_j, α−e_j)]`, those with `m_j ≤ −1` use
/// `√2[√(α_j−m_j)B(m+e_j, α) − √(α_j+1)B(m+e_j, α+e_j)]`.
pub fn delta_bar_on_v_expansion(e: &VExpansion, j: usize, lambda: f64) -> Result<VExpansion> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("the coefficient calculus is implemented for lambda > 0".into()));
    }
    let mut out = VExpansion::new();
    for t in collect_sources(e, j, -1) {
        let src = t.shift_m(j, 1);
        let a = t.alpha[j] as f64;
        let mj = t.m[j];
        let c = if mj >= 0 {
            let down = src.shift_alpha(j, -1).map(|s| e.coefficient(&s)).unwrap_or_default();
            (a + mj as f64 + 1.0).sqrt() * e.coefficient(&src) - a.sqrt() * down
        } else {
            let up = src.shift_alpha(j, 1).map(|s| e.coefficient(&s)).unwrap_or_default();
            (a - mj as f64).sqrt() * e.coefficient(&src) - (a + 1.0).sqrt() * up
        };
        if c.norm() != 0.0 {
            out.add(t, c * SQRT2);
        }
    }
    Ok(out)
}

/// Coefficients of `Θ(λ)M`:
/// `∂_λB + (n/2λ)B + (1/2λ)Σ_j[√(α_j(α_j+|m_j|))B(m, α−e_j) − √((α_j+1)(α_j+|m_j|+1))B(m, α+e_j)]`.
/// This agrees with [`ThetaForm::Consistent`] on the matrix side.
pub fn theta_on_v_expansion(e: &VExpansion, lambda: f64) -> Result<VExpansion> {
    if lambda <= 0.0 {
        return Err(Error::Unsupported("theta is defined here for lambda > 0 only".into()));
    }
    if e.d_lambda.is_none() && !e.is_zero() {
        return Err(Error::InvalidArgument("theta needs the lambda-derivative of the coefficients".into()));
    }
    let n = match e.terms.keys().next() {
        Some(v) => v.m.len(),
        None => return Ok(VExpansion::new()),
    };
    let mut targets: Vec<VIndex> = Vec::new();
    for v in e.terms.keys().chain(e.d_lambda.iter().flat_map(|d| d.keys())) {
        targets.push(v.clone());
        for j in 0..n {
            targets.extend(v.shift_alpha(j, 1));
            targets.extend(v.shift_alpha(j, -1));
        }
    }
    targets.sort();
    targets.dedup();
    let mut out = VExpansion::new();
    for t in targets {
        let mut c = e.d_coefficient(&t) + e.coefficient(&t) * (n as f64 / (2.0 * lambda));
        for j in 0..n {
            let a = t.alpha[j] as f64;
            let mj = t.m[j].unsigned_abs() as f64;
            let down = t.shift_alpha(j, -1).map(|s| e.coefficient(&s)).unwrap_or_default();
            let up = e.coefficient(&t.shift_alpha(j, 1).expect("raising alpha"));
            c += ((a * (a + mj)).sqrt() * down - ((a + 1.0) * (a + mj + 1.0)).sqrt() * up) / (2.0 * lambda);
        }
        if c.norm() != 0.0 {
            out.add(t, c);
        }
    }
    Ok(out)
}

/// The form of `Θ` that the coefficient rule reproduces.
/// `terms` random `V_α^m` terms with `m_j ∈ [−2, 2]`, `α_j ≤ 2` and coefficients in the unit square;
/// with `with_derivative` each term also gets a random `∂_λB`.
pub fn random_v_expansion(rng: &mut impl rand::Rng, n: usize, terms: usize, with_derivative: bool) -> VExpansion {
    let mut e = VExpansion::new();
    let mut d = BTreeMap::new();
    for _ in 0..terms {
        let m: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
        let alpha: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        let v = VIndex::new(m, alpha);
        e.add(v.clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        d.insert(v, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    if with_derivative {
        e.d_lambda = Some(d);
    }
    e
}

pub const V_EXPANSION_THETA_FORM: ThetaForm = ThetaForm::Consistent;

/// A `V`-expansion tabulated over a λ-grid, the serialized exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VExpansionTable {
    pub lambdas: Vec<f64>,
    pub terms: Vec<VTableTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VTableTerm {
    pub m: Vec<i64>,
    pub alpha: Vec<usize>,
    pub b: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<Vec<Complex64>>,
}

impl VExpansionTable {
    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.m.len() != t.alpha.len() {
                return Err(Error::InvalidArgument("m and alpha lengths differ".into()));
            }
            if t.b.len() != self.lambdas.len() || t.db.as_ref().is_some_and(|d| d.len() != self.lambdas.len()) {
                return Err(Error::InvalidArgument("coefficient table length differs from the grid".into()));
            }
            if t.b.iter().chain(t.db.iter().flatten()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// The expansion at grid node `i`.
    pub fn at(&self, i: usize) -> VExpansion {
        let mut e = VExpansion::new();
        let has_d = self.terms.iter().all(|t| t.db.is_some());
        let mut d = BTreeMap::new();
        for t in &self.terms {
            let v = VIndex::new(t.m.clone(), t.alpha.clone());
            e.add(v.clone(), t.b[i]);
            if let Some(db) = &t.db {
                *d.entry(v).or_insert(Complex64::new(0.0, 0.0)) += db[i];
            }
        }
        if has_d {
            e.d_lambda = Some(d);
        }
        e
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }
}
