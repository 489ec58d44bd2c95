use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::point::Point;
use crate::error::{Error, Result};
use crate::HPoint;

/// A value paired with non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct Warned<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl<T> Warned<T> {
    pub fn clean(value: T) -> Self {
        Warned { value, warnings: Vec::new() }
    }
}

/// Anything that can be evaluated at a point of `Hⁿ`.
pub trait HFunction: Sync {
    fn eval(&self, p: &HPoint) -> Complex64;
}

impl<F: Fn(&HPoint) -> Complex64 + Sync> HFunction for F {
    fn eval(&self, p: &HPoint) -> Complex64 {
        self(p)
    }
}

/// Tensor grid on `ℂⁿ`: `m` uniform nodes on `[−L, L]` along each of the
/// `2n` real axes, ordered `x_1..x_n, y_1..y_n`, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    dim: usize,
    half_width: f64,
    nodes_per_axis: usize,
    #[serde(skip)]
    points: Vec<Complex64>,
}

impl ZGrid {
    pub fn new(dim: usize, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        if dim == 0 || nodes_per_axis < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad z-grid: dim {dim}, half-width {half_width}, {nodes_per_axis} nodes per axis"
            )));
        }
        let mut g = ZGrid { dim, half_width, nodes_per_axis, points: Vec::new() };
        g.fill_points();
        Ok(g)
    }

    /// Grid sized for Weyl transforms with `|λ| ∈ [λ_min, λ_max]` up to degree `K`:
    /// half-width `6/√λ_min`, spacing `π/(1.3·√(λ_max(2K+n)))`.
    pub fn for_lambda_range(dim: usize, lambda_min: f64, lambda_max: f64, cutoff: usize) -> Result<Self> {
        let half = 6.0 / lambda_min.sqrt();
        let h = std::f64::consts::PI / (1.3 * (lambda_max * (2 * cutoff + dim) as f64).sqrt());
        let mut m = (2.0 * half / h).ceil() as usize + 1;
        if m % 2 == 0 {
            m += 1;
        }
        Self::new(dim, half, m)
    }

    fn fill_points(&mut self) {
        let len = self.len();
        let n = self.dim;
        let mut pts = Vec::with_capacity(len * n);
        let mut coords = vec![0.0; 2 * n];
        for i in 0..len {
            self.coords_into(i, &mut coords);
            for j in 0..n {
                pts.push(Complex64::new(coords[j], coords[n + j]));
            }
        }
        self.points = pts;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes_per_axis - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis.pow(2 * self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^{2n}` shared by every node.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(2 * self.dim as i32)
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis.pow((2 * self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, i: usize, axis: usize) -> usize {
        (i / self.stride(axis)) % self.nodes_per_axis
    }

    pub fn coords_into(&self, i: usize, out: &mut [f64]) {
        for (axis, c) in out.iter_mut().enumerate().take(2 * self.dim) {
            *c = self.node(self.axis_index(i, axis));
        }
    }

    /// Whether the node lies in the outer 10% shell of the box.
    pub fn in_outer_shell(&self, i: usize) -> bool {
        let cut = 0.9 * self.half_width;
        self.point(i).iter().any(|w| w.re.abs() > cut || w.im.abs() > cut)
    }

    pub fn sample(&self, f: impl Fn(&[Complex64]) -> Complex64 + Sync) -> ZSamples {
        let values = (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect();
        ZSamples { grid: Arc::new(self.clone()), values }
    }
}

/// Samples of a function on `ℂⁿ` over a [`ZGrid`].
#[derive(Debug, Clone)]
pub struct ZSamples {
    pub grid: Arc<ZGrid>,
    pub values: Vec<Complex64>,
}

impl ZSamples {
    pub fn from_fn(grid: &Arc<ZGrid>, f: impl Fn(&[Complex64]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        ZSamples { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<ZGrid>) -> Self {
        ZSamples { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.weight()
    }

    /// `∫ f ḡ dz`.
    pub fn inner(&self, other: &ZSamples) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.grid.weight()
    }

    /// Fraction of the L¹ mass in the outer 10% shell.
    pub fn shell_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = (0..self.grid.len())
            .filter(|&i| self.grid.in_outer_shell(i))
            .map(|i| self.values[i].norm())
            .sum();
        outer / total
    }

    pub fn max_abs_diff(&self, other: &ZSamples) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()))
    }
}

/// Uniform grid of `count` points on `[−T, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub half_length: f64,
    pub count: usize,
}

impl TGrid {
    pub fn new(half_length: f64, count: usize) -> Result<Self> {
        if !(half_length > 0.0) || count < 2 {
            return Err(Error::InvalidArgument(format!("bad t-grid: T = {half_length}, {count} points")));
        }
        Ok(TGrid { half_length, count })
    }

    /// `2^m` points, as used by the transform layers.
    pub fn power_of_two(half_length: f64, log2_count: u32) -> Result<Self> {
        Self::new(half_length, 1usize << log2_count)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.count as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }
}

/// Complex samples of `f(z,t)` on `ZGrid × TGrid`, stored z-major.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub zgrid: Arc<ZGrid>,
    pub tgrid: TGrid,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridMeta {
    dim: usize,
    z_half_width: f64,
    z_nodes_per_axis: usize,
    t_half_length: f64,
    t_count: usize,
}

impl GridFunction {
    pub fn from_fn(zgrid: &Arc<ZGrid>, tgrid: TGrid, f: &(dyn Fn(&HPoint) -> Complex64 + Sync)) -> Self {
        let nt = tgrid.count;
        let values = (0..zgrid.len() * nt)
            .into_par_iter()
            .map(|k| {
                let p = Point::new(zgrid.point(k / nt).to_vec(), tgrid.node(k % nt));
                f(&p)
            })
            .collect();
        GridFunction { zgrid: zgrid.clone(), tgrid, values }
    }

    pub fn zeros(zgrid: &Arc<ZGrid>, tgrid: TGrid) -> Self {
        GridFunction { zgrid: zgrid.clone(), tgrid, values: vec![Complex64::new(0.0, 0.0); zgrid.len() * tgrid.count] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.zgrid.weight() * self.tgrid.spacing()
    }

    pub fn point(&self, k: usize) -> HPoint {
        let nt = self.tgrid.count;
        Point::new(self.zgrid.point(k / nt).to_vec(), self.tgrid.node(k % nt))
    }

    pub fn value(&self, iz: usize, it: usize) -> Complex64 {
        self.values[iz * self.tgrid.count + it]
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.weight()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.weight()
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.weight()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridFunction { zgrid: self.zgrid.clone(), tgrid: self.tgrid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "grid functions on different grids");
        GridFunction {
            zgrid: self.zgrid.clone(),
            tgrid: self.tgrid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()))
    }

    /// Fraction of the L¹ mass in the outer 10% shell of the box (in z or t).
    pub fn shell_fraction(&self) -> f64 {
        let nt = self.tgrid.count;
        let tcut = 0.9 * self.tgrid.half_length;
        let mut total = 0.0;
        let mut outer = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let a = v.norm();
            total += a;
            if self.zgrid.in_outer_shell(k / nt) || self.tgrid.node(k % nt).abs() > tcut {
                outer += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// `f^λ(z) = ∫ f(z,t) e^{iλt} dt` by the rectangle rule on the t-grid.
    pub fn lambda_slice(&self, lambda: f64) -> ZSamples {
        let nt = self.tgrid.count;
        let dt = self.tgrid.spacing();
        let phases: Vec<Complex64> = (0..nt).map(|i| Complex64::from_polar(dt, lambda * self.tgrid.node(i))).collect();
        let values = (0..self.zgrid.len())
            .into_par_iter()
            .map(|iz| {
                self.values[iz * nt..(iz + 1) * nt].iter().zip(&phases).map(|(v, p)| v * p).sum()
            })
            .collect();
        ZSamples { grid: self.zgrid.clone(), values }
    }

    /// Writes a JSON metadata line followed by CSV rows `x.., y.., t, re, im`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let meta = GridMeta {
            dim: self.zgrid.dim(),
            z_half_width: self.zgrid.half_width(),
            z_nodes_per_axis: self.zgrid.nodes_per_axis(),
            t_half_length: self.tgrid.half_length,
            t_count: self.tgrid.count,
        };
        writeln!(w, "# {}", serde_json::to_string(&meta)?)?;
        let n = self.zgrid.dim();
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=n).map(|j| format!("x_{j}")).collect();
        header.extend((1..=n).map(|j| format!("y_{j}")));
        header.extend(["t", "re", "im"].map(String::from));
        out.write_record(&header).map_err(csv_err)?;
        for (k, v) in self.values.iter().enumerate() {
            let p = self.point(k);
            let mut row: Vec<String> = p.z.iter().map(|w| format!("{:e}", w.re)).collect();
            row.extend(p.z.iter().map(|w| format!("{:e}", w.im)));
            row.push(format!("{:e}", p.t));
            row.push(format!("{:e}", v.re));
            row.push(format!("{:e}", v.im));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(mut r: impl Read) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let (first, rest) = text.split_once('\n').ok_or_else(|| Error::InvalidArgument("empty grid file".into()))?;
        let meta: GridMeta = serde_json::from_str(first.trim_start_matches('#').trim())?;
        let zgrid = Arc::new(ZGrid::new(meta.dim, meta.z_half_width, meta.z_nodes_per_axis)?);
        let tgrid = TGrid::new(meta.t_half_length, meta.t_count)?;
        let mut rd = csv::Reader::from_reader(rest.as_bytes());
        let mut values = Vec::with_capacity(zgrid.len() * tgrid.count);
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let k = rec.len();
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number {s}: {e}")));
            values.push(Complex64::new(parse(&rec[k - 2])?, parse(&rec[k - 1])?));
        }
        if values.len() != zgrid.len() * tgrid.count {
            return Err(Error::InvalidArgument(format!(
                "grid file has {} rows, expected {}",
                values.len(),
                zgrid.len() * tgrid.count
            )));
        }
        Ok(GridFunction { zgrid, tgrid, values })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

impl HFunction for GridFunction {
    /// Multilinear interpolation; zero outside the box.
    fn eval(&self, p: &HPoint) -> Complex64 {
        let n = self.zgrid.dim();
        let h = self.zgrid.spacing();
        let m = self.zgrid.nodes_per_axis();
        let mut base = Vec::with_capacity(2 * n + 1);
        let mut frac = Vec::with_capacity(2 * n + 1);
        let coords = p.z.iter().map(|w| w.re).chain(p.z.iter().map(|w| w.im));
        for c in coords {
            let s = (c + self.zgrid.half_width()) / h;
            if s < 0.0 || s > (m - 1) as f64 {
                return Complex64::new(0.0, 0.0);
            }
            let i = (s.floor() as usize).min(m - 2);
            base.push(i);
            frac.push(s - i as f64);
        }
        let dt = self.tgrid.spacing();
        let st = (p.t + self.tgrid.half_length) / dt;
        let nt = self.tgrid.count;
        if st < 0.0 || st > (nt - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let it = (st.floor() as usize).min(nt - 2);
        let ft = st - it as f64;
        let axes = 2 * n;
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << (axes + 1)) {
            let mut w = 1.0;
            let mut iz = 0;
            for a in 0..axes {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                iz += (base[a] + bit) * self.zgrid.stride(a);
            }
            let bit = (corner >> axes) & 1;
            w *= if bit == 1 { ft } else { 1.0 - ft };
            if w != 0.0 {
                acc += self.values[iz * nt + it + bit] * w;
            }
        }
        acc
    }
}
