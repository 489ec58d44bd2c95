use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::transform::{displacement_matrix, weyl_transform};
use crate::error::{Error, Result};
use crate::geometry::{GridFunction, Warned};
use crate::hermite::{CMatrix, OperatorMatrix, TruncatedBasis};

/// Nonzero `λ` nodes with quadrature weights for `∫ … dλ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn log_nodes(min: f64, max: f64, ratio: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(min > 0.0 && max > min && ratio > 1.0) {
        return Err(Error::InvalidArgument(format!("bad lambda grid: min {min}, max {max}, ratio {ratio}")));
    }
    let steps = ((max / min).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let h = (max / min).ln() / steps as f64;
    let nodes: Vec<f64> = (0..=steps).map(|i| min * (h * i as f64).exp()).collect();
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(i, &l)| if i == 0 || i == steps { 0.5 * l * h } else { l * h })
        .collect();
    Ok((nodes, weights))
}

impl LambdaGrid {
    /// `λ_min ρ^k` up to `λ_max` with the ratio adjusted to land on both ends;
    /// trapezoid weights in `ln λ`.
    pub fn positive_log(min: f64, max: f64, ratio: f64) -> Result<Self> {
        let (nodes, weights) = log_nodes(min, max, ratio)?;
        Ok(LambdaGrid { nodes, weights })
    }

    /// `±λ_min ρ^k`, ascending.
    pub fn signed_log(min: f64, max: f64, ratio: f64) -> Result<Self> {
        let (pos, w) = log_nodes(min, max, ratio)?;
        let mut nodes: Vec<f64> = pos.iter().rev().map(|l| -l).collect();
        let mut weights: Vec<f64> = w.iter().rev().copied().collect();
        nodes.extend(pos);
        weights.extend(w);
        Ok(LambdaGrid { nodes, weights })
    }

    /// Parses `"min,max,ratio"` into a signed grid.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<f64> = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Usage(format!("lambda grid `{spec}`: {e}"))))
            .collect::<Result<_>>()?;
        if parts.len() != 3 {
            return Err(Error::Usage(format!("lambda grid `{spec}` needs min,max,ratio")));
        }
        Self::signed_log(parts[0], parts[1], parts[2])
    }

    pub fn default_signed() -> Self {
        Self::signed_log(0.125, 8.0, 1.3).expect("valid default grid")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Positive nodes with both neighbours on the same side of zero.
    pub fn positive_interior(&self) -> Vec<usize> {
        (1..self.len().saturating_sub(1))
            .filter(|&i| self.nodes[i - 1] > 0.0 && self.nodes[i] > 0.0 && self.nodes[i + 1] > 0.0)
            .collect()
    }
}

/// A λ-dependent operator that can be evaluated anywhere, with an optional analytic derivative.
pub trait SmoothFamily: Sync {
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix;

    fn derivative(&self, _lambda: f64, _basis: &Arc<TruncatedBasis>) -> Option<OperatorMatrix> {
        None
    }

    /// Whether every value commutes with all `P_k(λ)`.
    fn is_diagonal(&self) -> bool {
        false
    }
}

/// A [`SmoothFamily`] built from closures.
pub struct FnFamily<F, D = fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix> {
    pub value: F,
    pub derivative: Option<D>,
    pub diagonal: bool,
}

impl<F> FnFamily<F>
where
    F: Fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix + Sync,
{
    pub fn new(value: F) -> Self {
        FnFamily { value, derivative: None, diagonal: false }
    }
}

impl<F, D> FnFamily<F, D>
where
    F: Fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix + Sync,
    D: Fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix + Sync,
{
    pub fn with_derivative(value: F, derivative: D) -> Self {
        FnFamily { value, derivative: Some(derivative), diagonal: false }
    }
}

impl<F, D> SmoothFamily for FnFamily<F, D>
where
    F: Fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix + Sync,
    D: Fn(f64, &Arc<TruncatedBasis>) -> OperatorMatrix + Sync,
{
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
        (self.value)(lambda, basis)
    }

    fn derivative(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> Option<OperatorMatrix> {
        self.derivative.as_ref().map(|d| d(lambda, basis))
    }

    fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

/// The identity family `M(λ) = I`.
pub struct IdentityFamily;

impl SmoothFamily for IdentityFamily {
    fn at(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> OperatorMatrix {
        OperatorMatrix::identity(basis, lambda)
    }

    fn derivative(&self, lambda: f64, basis: &Arc<TruncatedBasis>) -> Option<OperatorMatrix> {
        Some(OperatorMatrix::zeros(basis, lambda))
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

/// Values of an operator family on a λ-grid.
#[derive(Debug, Clone)]
pub struct MultiplierFamily {
    pub grid: LambdaGrid,
    pub basis: Arc<TruncatedBasis>,
    pub matrices: Vec<OperatorMatrix>,
    pub d_lambda: Option<Vec<OperatorMatrix>>,
    pub diagonal: bool,
}

#[derive(Serialize, Deserialize)]
struct FamilyManifest {
    basis: TruncatedBasis,
    lambda_grid: LambdaGrid,
    diagonal: bool,
    matrix_files: Vec<String>,
    derivative_files: Option<Vec<String>>,
}

impl MultiplierFamily {
    pub fn sample(family: &dyn SmoothFamily, grid: &LambdaGrid, basis: &Arc<TruncatedBasis>) -> Self {
        let matrices = grid.nodes.par_iter().map(|&l| family.at(l, basis)).collect();
        let d: Vec<Option<OperatorMatrix>> = grid.nodes.par_iter().map(|&l| family.derivative(l, basis)).collect();
        let d_lambda = d.into_iter().collect::<Option<Vec<_>>>();
        MultiplierFamily { grid: grid.clone(), basis: basis.clone(), matrices, d_lambda, diagonal: family.is_diagonal() }
    }

    pub fn identity(grid: &LambdaGrid, basis: &Arc<TruncatedBasis>) -> Self {
        Self::sample(&IdentityFamily, grid, basis)
    }

    pub fn sup_op_norm(&self) -> f64 {
        self.matrices.iter().map(|m| m.op_norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MultiplierFamily {
            grid: self.grid.clone(),
            basis: self.basis.clone(),
            matrices: self.matrices.iter().map(|m| m.scale(c)).collect(),
            d_lambda: self.d_lambda.as_ref().map(|d| d.iter().map(|m| m.scale(c)).collect()),
            diagonal: self.diagonal,
        }
    }

    pub fn position(&self, lambda: f64) -> Option<usize> {
        self.grid.nodes.iter().position(|&l| (l - lambda).abs() <= 1e-12 * lambda.abs())
    }

    /// Writes `manifest.json` plus one CSV (`row,col,re,im`) per λ.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let write = |name: &str, m: &OperatorMatrix| -> Result<()> {
            let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            w.write_record(["row", "col", "re", "im"]).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for r in 0..m.entries().nrows() {
                for c in 0..m.entries().ncols() {
                    let v = m.entries()[(r, c)];
                    w.write_record([r.to_string(), c.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                }
            }
            w.flush()?;
            Ok(())
        };
        let mut files = Vec::new();
        for (i, m) in self.matrices.iter().enumerate() {
            let name = format!("matrix_{i:04}.csv");
            write(&name, m)?;
            files.push(name);
        }
        let dfiles = match &self.d_lambda {
            Some(d) => {
                let mut v = Vec::new();
                for (i, m) in d.iter().enumerate() {
                    let name = format!("derivative_{i:04}.csv");
                    write(&name, m)?;
                    v.push(name);
                }
                Some(v)
            }
            None => None,
        };
        let manifest = FamilyManifest {
            basis: (*self.basis).clone(),
            lambda_grid: self.grid.clone(),
            diagonal: self.diagonal,
            matrix_files: files,
            derivative_files: dfiles,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest: FamilyManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let basis = Arc::new(manifest.basis);
        let d = basis.len();
        let read = |name: &str, lambda: f64| -> Result<OperatorMatrix> {
            let mut rd = csv::Reader::from_path(dir.join(name)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut m = CMatrix::zeros(d, d);
            for rec in rd.records() {
                let rec = rec.map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let p = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string()));
                m[(p(0)? as usize, p(1)? as usize)] = Complex64::new(p(2)?, p(3)?);
            }
            OperatorMatrix::new(basis.clone(), lambda, m, 0)
        };
        let nodes = &manifest.lambda_grid.nodes;
        let matrices = manifest.matrix_files.iter().zip(nodes).map(|(f, &l)| read(f, l)).collect::<Result<_>>()?;
        let d_lambda = match &manifest.derivative_files {
            Some(v) => Some(v.iter().zip(nodes).map(|(f, &l)| read(f, l)).collect::<Result<_>>()?),
            None => None,
        };
        Ok(MultiplierFamily { grid: manifest.lambda_grid, basis, matrices, d_lambda, diagonal: manifest.diagonal })
    }
}

/// Fraction of the t-spectrum energy in the top 10% of frequencies below Nyquist.
pub fn nyquist_fraction(f: &GridFunction) -> f64 {
    let nt = f.tgrid.count;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nt);
    let cut = (0.45 * nt as f64) as usize;
    let mut total = 0.0;
    let mut high = 0.0;
    for iz in 0..f.zgrid.len() {
        let mut buf: Vec<Complex64> = f.values[iz * nt..(iz + 1) * nt].to_vec();
        fft.process(&mut buf);
        for (k, v) in buf.iter().enumerate() {
            let freq = k.min(nt - k);
            let e = v.norm_sqr();
            total += e;
            if freq >= cut {
                high += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        high / total
    }
}

/// `f̂(λ) = W_λ(f^λ)` on every grid λ.
pub fn group_fourier(f: &GridFunction, grid: &LambdaGrid, basis: &Arc<TruncatedBasis>) -> Result<Warned<MultiplierFamily>> {
    let mut warnings = Vec::new();
    let frac = nyquist_fraction(f);
    if frac > 0.01 {
        warnings.push(format!("{:.2}% of the t-spectrum lies near Nyquist; slices may alias", 100.0 * frac));
    }
    let mut matrices = Vec::with_capacity(grid.len());
    for &l in &grid.nodes {
        let w = weyl_transform(&f.lambda_slice(l), l, basis).map_err(|e| tag(l, e))?;
        warnings.extend(w.warnings.into_iter().map(|s| format!("lambda = {l}: {s}")));
        matrices.push(w.value);
    }
    warnings.dedup();
    Ok(Warned {
        value: MultiplierFamily { grid: grid.clone(), basis: basis.clone(), matrices, d_lambda: None, diagonal: false },
        warnings,
    })
}

fn tag(lambda: f64, e: Error) -> Error {
    Error::InvalidArgument(format!("lambda = {lambda}: {e}"))
}

/// `(2π)^{−n−1} ∫ ‖f̂(λ)‖²_HS |λ|^n dλ` on the family's grid.
pub fn plancherel_mass(fhat: &MultiplierFamily) -> f64 {
    let n = fhat.basis.dim() as i32;
    let s: f64 = fhat
        .grid
        .nodes
        .iter()
        .zip(&fhat.grid.weights)
        .zip(&fhat.matrices)
        .map(|((&l, &w), m)| w * m.hs_norm().powi(2) * l.abs().powi(n))
        .sum();
    s * (2.0 * PI).powi(-n - 1)
}

/// `T_M f(z,t) = (2π)^{−1} ∫ e^{−iλt} T^λ_{M(λ)} f^λ(z) dλ` on `f`'s grid.
pub fn apply_fourier_multiplier(m: &MultiplierFamily, f: &GridFunction) -> Result<Warned<GridFunction>> {
    let basis = &m.basis;
    let n = basis.dim() as i32;
    let nt = f.tgrid.count;
    let nz = f.zgrid.len();
    let mut warnings = Vec::new();
    let mut products = Vec::with_capacity(m.grid.len());
    for (k, &l) in m.grid.nodes.iter().enumerate() {
        let w = weyl_transform(&f.lambda_slice(l), l, basis).map_err(|e| tag(l, e))?;
        let p = &m.matrices[k] * &w.value;
        products.push(p);
    }
    let scale = products.iter().map(|p| p.hs_norm()).fold(0.0, f64::max);
    for p in &products {
        let c = p.boundary_content(1) * p.hs_norm();
        if scale > 0.0 && c > 1e-6 * scale {
            warnings.push(format!("lambda = {}: top-degree content {:.2e} relative to the largest slice", p.lambda(), c / scale));
        }
    }
    let tnodes = f.tgrid.nodes();
    let values: Vec<Complex64> = (0..nz)
        .into_par_iter()
        .flat_map_iter(|iz| {
            let z = f.zgrid.point(iz);
            let neg: Vec<Complex64> = z.iter().map(|w| -w).collect();
            let mut col = vec![Complex64::new(0.0, 0.0); nt];
            for (k, &l) in m.grid.nodes.iter().enumerate() {
                let d = displacement_matrix(l, &neg, basis);
                let tr: Complex64 = products[k].entries().iter().zip(d.transpose().iter()).map(|(a, b)| a * b).sum();
                let g = tr * ((2.0 * PI).powi(-n) * l.abs().powi(n)) * (m.grid.weights[k] / (2.0 * PI));
                for (it, &t) in tnodes.iter().enumerate() {
                    col[it] += g * Complex64::from_polar(1.0, -l * t);
                }
            }
            col
        })
        .collect();
    Ok(Warned { value: GridFunction { zgrid: f.zgrid.clone(), tgrid: f.tgrid, values }, warnings })
}
