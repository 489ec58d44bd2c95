use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::cubes::CubeSystem;
use super::grid::{group_offset, BoxGrid};
use crate::error::{Error, Result};
use crate::heat::{KernelGrid, KernelKind, RadialMultiplier, RadialTable};

const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// A radial group kernel `K(|z|, t)` on a [`BoxGrid`], stored cell-averaged so
/// that `Σ_y f(y) K(y⁻¹x)·vol` is the Riemann sum of the convolution.
#[derive(Debug, Clone)]
pub struct GroupKernel {
    pub label: String,
    ds: f64,
    dt: f64,
    values: DMatrix<f64>,
    cell_volume: f64,
    dim: usize,
}

/// Scales `t_j = 2^{−j}`, `j = 1..=N`.
pub fn truncation_scales(levels: u32) -> Vec<f64> {
    (1..=levels).map(|j| 2f64.powi(-(j as i32))).collect()
}

fn box_kernel_grid(grid: &BoxGrid, r_min: f64) -> Result<KernelGrid> {
    let n = grid.dim();
    let l = grid.half_width();
    let s_max = 2.0 * l * (2.0 * n as f64).sqrt() + 2.0 * grid.hz();
    let t_max = (2.0 + n as f64) * l * l + 2.0 * grid.ht();
    KernelGrid::covering(n, s_max, t_max, r_min)
}

impl GroupKernel {
    /// `K^N = Σ_{j=1}^N T_Mψ_{2^{−j}}`.
    pub fn truncated(m: &RadialMultiplier, levels: u32, grid: &BoxGrid) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidArgument("need N ≥ 1".into()));
        }
        let kg = box_kernel_grid(grid, 2f64.powi(-(levels as i32) - 1))?;
        let mut sum: Option<RadialTable> = None;
        for r in truncation_scales(levels) {
            let t = RadialTable::build_truncated(m, KernelKind::Psi, r, &kg)?;
            sum = Some(match sum {
                None => t,
                Some(mut acc) => {
                    acc.value += &t.value;
                    acc
                }
            });
        }
        Ok(Self::cell_average(format!("T^{levels}[{m:?}]"), &sum.expect("levels ≥ 1"), grid))
    }

    /// `φ_{r_plus} − φ_{r_minus}`, the telescoped form of the identity multiplier, on the
    /// same radial grid [`Self::truncated`] uses for `N` levels.
    pub fn heat_difference(levels: u32, grid: &BoxGrid) -> Result<Self> {
        let r_plus = 2f64.powi(-(levels as i32) - 1);
        let kg = box_kernel_grid(grid, r_plus)?;
        let id = RadialMultiplier::Identity;
        let mut t = RadialTable::build_truncated(&id, KernelKind::Phi, r_plus, &kg)?;
        t.value -= &RadialTable::build_truncated(&id, KernelKind::Phi, 0.5, &kg)?.value;
        Ok(Self::cell_average(format!("phi({r_plus}) - phi(0.5)"), &t, grid))
    }

    /// Cell averages: exact in `t` for the piecewise-linear table, composite 5-point Gauss
    /// in `x` and `y` with sub-cells no wider than the finest kernel scale.
    fn cell_average(label: String, table: &RadialTable, grid: &BoxGrid) -> Self {
        let n = grid.dim();
        let (hz, ht) = (grid.hz(), grid.ht());
        let (ds, dt) = (hz / 6.0, ht / 6.0);
        let (ns, nt) = (
            ((table.grid.s_max - hz) / ds).floor() as usize,
            ((table.grid.t_max - ht) / dt).floor() as usize,
        );
        let tg = &table.grid;
        let tdt = tg.dt();
        // cumulative ∫_0^{t_j} K(s_i, t) dt of the linear interpolant
        let cumulative: Vec<Vec<f64>> = (0..tg.s_nodes)
            .map(|i| {
                let mut c = Vec::with_capacity(tg.t_nodes);
                let mut acc = 0.0;
                c.push(0.0);
                for j in 1..tg.t_nodes {
                    acc += 0.5 * tdt * (table.value[(i, j - 1)] + table.value[(i, j)]);
                    c.push(acc);
                }
                c
            })
            .collect();
        let primitive = |i: usize, t: f64| -> f64 {
            let u = t.abs() / tdt;
            let j = u.floor() as usize;
            let val = if j + 1 >= tg.t_nodes {
                cumulative[i][tg.t_nodes - 1]
            } else {
                let b = u - j as f64;
                let (v0, v1) = (table.value[(i, j)], table.value[(i, j + 1)]);
                cumulative[i][j] + tdt * b * (v0 + 0.5 * b * (v1 - v0))
            };
            val.copysign(t)
        };
        let t_average = |s: f64, t: f64| -> f64 {
            let fs = s / tg.ds();
            let i = fs.floor() as usize;
            if i + 1 >= tg.s_nodes {
                return 0.0;
            }
            let a = fs - i as f64;
            let row = |k: usize| (primitive(k, t + 0.5 * ht) - primitive(k, t - 0.5 * ht)) / ht;
            (1.0 - a) * row(i) + a * row(i + 1)
        };
        let sub = ((hz / (8.0 * tg.ds())).ceil() as usize).max(1);
        let nodes: Vec<(f64, f64)> = (0..sub)
            .flat_map(|k| {
                GAUSS5.iter().map(move |&(u, w)| (-0.5 + (k as f64 + 0.5 * (u + 1.0)) / sub as f64, w / (2.0 * sub as f64)))
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..ns)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 * ds;
                (0..nt)
                    .map(|j| {
                        let t = j as f64 * dt;
                        // average over a cell offset by s along x₁ (n = 1 geometry; the other
                        // coordinates enter only through |z|)
                        let mut acc = 0.0;
                        for &(u, wu) in &nodes {
                            for &(v, wv) in &nodes {
                                let (x, y) = (s + hz * u, hz * v);
                                acc += wu * wv * t_average((x * x + y * y).sqrt(), t);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let values = DMatrix::from_fn(ns, nt, |i, j| rows[i][j]);
        GroupKernel { label, ds, dt, values, cell_volume: grid.cell_volume(), dim: n }
    }

    /// Cell-averaged `K` at `(|z|², t)`.
    #[inline]
    pub fn at(&self, s2: f64, t: f64) -> f64 {
        let (fs, ft) = (s2.sqrt() / self.ds, t.abs() / self.dt);
        let (i, j) = (fs as usize, ft as usize);
        if i + 1 >= self.values.nrows() || j + 1 >= self.values.ncols() {
            return 0.0;
        }
        let (a, b) = (fs - i as f64, ft - j as f64);
        let v = &self.values;
        (1.0 - a) * ((1.0 - b) * v[(i, j)] + b * v[(i, j + 1)]) + a * ((1.0 - b) * v[(i + 1, j)] + b * v[(i + 1, j + 1)])
    }

    /// `Σ_{y : keep(y)} K(y⁻¹x) f(y) vol` at the given targets.
    pub fn apply_to(&self, grid: &BoxGrid, f: &[f64], targets: &[usize], keep: impl Fn(usize) -> bool + Sync) -> Vec<f64> {
        debug_assert_eq!(grid.dim(), self.dim);
        let n = self.dim;
        let sources: Vec<usize> = (0..grid.len()).filter(|&y| f[y] != 0.0 && keep(y)).collect();
        targets
            .par_iter()
            .map(|&x| {
                let px = grid.point(x);
                let mut acc = 0.0;
                for &y in &sources {
                    let (s2, t) = group_offset(px, grid.point(y), n);
                    acc += self.at(s2, t) * f[y];
                }
                acc * self.cell_volume
            })
            .collect()
    }

    pub fn apply(&self, grid: &BoxGrid, f: &[f64]) -> Vec<f64> {
        let all: Vec<usize> = (0..grid.len()).collect();
        self.apply_to(grid, f, &all, |_| true)
    }

    /// Schur bound `max(max row ℓ¹, max column ℓ¹)·vol` of the discrete operator, an upper bound for its ℓᵖ norm.
    pub fn schur_bound(&self, grid: &BoxGrid) -> f64 {
        let n = self.dim;
        let np = grid.len();
        let rows: Vec<(f64, f64)> = (0..np)
            .into_par_iter()
            .map(|x| {
                let (mut r, mut c) = (0.0, 0.0);
                for y in 0..np {
                    let (s2, t) = group_offset(grid.point(x), grid.point(y), n);
                    r += self.at(s2, t).abs();
                    let (s2, t) = group_offset(grid.point(y), grid.point(x), n);
                    c += self.at(s2, t).abs();
                }
                (r, c)
            })
            .collect();
        let r = rows.iter().map(|p| p.0).fold(0.0, f64::max);
        let c = rows.iter().map(|p| p.1).fold(0.0, f64::max);
        r.max(c) * self.cell_volume
    }
}

/// `T^N f` on the whole grid.
pub fn truncated_operator(kernel: &GroupKernel, grid: &BoxGrid, f: &[f64]) -> Vec<f64> {
    kernel.apply(grid, f)
}

/// `T^{N*}f` and `M_{T^N}f` from one pass over the cubes.
#[derive(Debug, Clone, Serialize)]
pub struct GrandMaximal {
    /// `sup_{Q∋x} |∫_{H∖3Q} K(y⁻¹x) f(y) dy|`.
    pub tstar: Vec<f64>,
    /// `sup_{Q∋x} max_{ξ∈Q} |T^N(fχ_{H∖3Q})(ξ)|`.
    pub mtn: Vec<f64>,
}

pub fn grand_maximal(kernel: &GroupKernel, cubes: &CubeSystem, f: &[f64]) -> GrandMaximal {
    let grid = &cubes.grid;
    let np = grid.len();
    let mut tstar = vec![0.0f64; np];
    let mut mtn = vec![0.0f64; np];
    for (id, q) in cubes.cubes.iter().enumerate() {
        let (center, radius) = (q.center, cubes.dilated_radius(id, 3.0));
        let g = kernel.apply_to(grid, f, &q.members, |y| grid.quasi_distance(y, center) >= radius);
        let peak = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (&p, v) in q.members.iter().zip(&g) {
            tstar[p] = tstar[p].max(v.abs());
            mtn[p] = mtn[p].max(peak);
        }
    }
    GrandMaximal { tstar, mtn }
}

/// Smooth radial cutoff in `ρ`: 1 for `ρ ≤ ½`, 0 for `ρ ≥ 1`, quintic smoothstep in between.
pub fn quintic_bump(rho: f64) -> f64 {
    if rho <= 0.5 {
        1.0
    } else if rho >= 1.0 {
        0.0
    } else {
        let u = 2.0 * (1.0 - rho);
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// `|T₂^N f₂(x)|` over targets, with `K₂ = K(1 − φ(ρ))` and `f₂ = fχ_{H∖3Q}`, the far part of (5.29).
pub fn far_part(kernel: &GroupKernel, grid: &BoxGrid, f: &[f64], targets: &[usize], center: usize, radius: f64) -> Vec<f64> {
    let n = grid.dim();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for y in 0..grid.len() {
                if f[y] == 0.0 || grid.quasi_distance(y, center) < radius {
                    continue;
                }
                let (s2, t) = group_offset(grid.point(x), grid.point(y), n);
                acc += kernel.at(s2, t) * (1.0 - quintic_bump(s2 * s2 + t * t)) * f[y];
            }
            (acc * kernel.cell_volume).abs()
        })
        .collect()
}
