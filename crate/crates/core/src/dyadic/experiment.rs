use rand::Rng;
use serde::Serialize;

use super::cubes::CubeSystem;
use super::grid::BoxGrid;
use super::operator::{grand_maximal, GroupKernel};
use super::sparse::{build_sparse_family, maximal_function, sparse_bound, SparseCheck, SparseParams};
use super::weights::{ap_characteristic, Weight};
use crate::error::{Error, Result};

/// Seeded Gaussian-envelope packet `A·exp(−|z−z₀|²/w² − (t−t₀)²/w⁴)·cos(k·x₁ + φ)`,
/// restricted to the inner half of the box.
#[derive(Debug, Clone, Serialize)]
pub struct TestPacket {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl TestPacket {
    pub fn random(rng: &mut impl Rng, grid: &BoxGrid) -> Self {
        let n = grid.dim();
        let l = grid.half_width();
        let mut center: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-0.2 * l..0.2 * l)).collect();
        center.push(rng.gen_range(-0.1 * l * l..0.1 * l * l));
        TestPacket {
            amplitude: rng.gen_range(0.5..2.0),
            center,
            width: rng.gen_range(0.15..0.35) * l,
            frequency: rng.gen_range(0.0..6.0) / l,
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn sample(&self, grid: &BoxGrid) -> Vec<f64> {
        let n = grid.dim();
        (0..grid.len())
            .map(|i| {
                if !grid.in_inner_half(i) {
                    return 0.0;
                }
                let p = grid.point(i);
                let dz: f64 = (0..2 * n).map(|a| (p[a] - self.center[a]).powi(2)).sum();
                let dt = p[2 * n] - self.center[2 * n];
                let w2 = self.width * self.width;
                self.amplitude * (-dz / w2 - dt * dt / (w2 * w2)).exp() * (self.frequency * p[0] + self.phase).cos()
            })
            .collect()
    }
}

pub fn random_test_functions(rng: &mut impl Rng, grid: &BoxGrid, count: usize) -> Vec<(TestPacket, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let p = TestPacket::random(rng, grid);
            let f = p.sample(grid);
            (p, f)
        })
        .collect()
}

/// The level-0 cube whose centre is closest to the origin.
pub fn central_root(cubes: &CubeSystem) -> usize {
    let g = &cubes.grid;
    cubes.levels[0].iter().copied().min_by(|&a, &b| g.rho(cubes.cubes[a].center).total_cmp(&g.rho(cubes.cubes[b].center))).expect("level 0 is never empty")
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseDominationRow {
    pub role: String,
    pub ratio: f64,
    pub family_size: usize,
    pub generations: usize,
    pub check: SparseCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseDominationReport {
    pub kernel: String,
    pub root: usize,
    pub fitted_c: f64,
    pub rows: Vec<SparseDominationRow>,
    /// Largest held-out ratio over the fitted constant.
    pub degradation: f64,
    pub pass: bool,
}

/// `|T^N(fχ_{3Q₀})| ≤ C Σ_{Q∈F}(avg_{3Q}|f|²)^{1/2}χ_Q` on `Q₀`: `C` fitted on the first function,
/// the others must stay within a factor 2.
pub fn sparse_domination_experiment(
    kernel: &GroupKernel,
    cubes: &CubeSystem,
    root: usize,
    functions: &[Vec<f64>],
    params: &SparseParams,
) -> Result<SparseDominationReport> {
    if functions.len() < 2 {
        return Err(Error::InvalidArgument("need a calibration function and at least one held-out function".into()));
    }
    let grid = &cubes.grid;
    let q0 = &cubes.cubes[root];
    let three = cubes.dilated_radius(root, 3.0);
    let mut rows = Vec::new();
    for (k, f) in functions.iter().enumerate() {
        let gm = grand_maximal(kernel, cubes, f);
        let fam = build_sparse_family(cubes, root, f, &gm.mtn, params)?;
        let local: Vec<f64> = (0..grid.len()).map(|p| if grid.quasi_distance(p, q0.center) < three { f[p] } else { 0.0 }).collect();
        let lhs = kernel.apply_to(grid, &local, &q0.members, |_| true);
        let rhs = sparse_bound(&fam, cubes, f);
        let ratio = q0.members.iter().zip(&lhs).filter(|(&p, _)| rhs[p] > 0.0).map(|(&p, v)| v.abs() / rhs[p]).fold(0.0, f64::max);
        rows.push(SparseDominationRow {
            role: if k == 0 { "calibration".into() } else { format!("held-out {k}") },
            ratio,
            family_size: fam.all().count(),
            generations: fam.generations.len(),
            check: fam.verify(cubes),
        });
    }
    let fitted_c = rows[0].ratio;
    let degradation = rows[1..].iter().map(|r| r.ratio / fitted_c).fold(0.0, f64::max);
    let pass = fitted_c.is_finite() && fitted_c > 0.0 && degradation <= 2.0;
    Ok(SparseDominationReport { kernel: kernel.label.clone(), root, fitted_c, rows, degradation, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetPoint {
    pub lambda: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeRow {
    pub levels: u32,
    /// `max_λ λ² μ{T^{N*}f > λ} / ‖f‖²₂`.
    pub constant: f64,
    pub curve: Vec<LevelSetPoint>,
    /// Fitted constants of the pointwise bounds for the same `N`.
    pub tstar_bound: f64,
    pub mtn_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeReport {
    pub rows: Vec<WeakTypeRow>,
    pub spread: f64,
    pub tstar_spread: f64,
    pub mtn_spread: f64,
    pub pass: bool,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let hi = v.iter().copied().fold(0.0, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Weak-(2,2) level sets of `T^{N*}f` and the pointwise bounds
/// `T^{N*}f ≤ C(Λ(T^Nf) + Λ₂f + Λ(Λ₂f))` and `M_{T^N}f ≤ C(Λ₂f + T^{N*}f)`, for each kernel.
/// Every constant is the largest ratio over all test functions; the level-set curve is that of the first.
pub fn weak_type_experiment(
    kernels: &[(u32, GroupKernel)],
    cubes: &CubeSystem,
    functions: &[Vec<f64>],
    lambdas: usize,
) -> Result<WeakTypeReport> {
    let grid = &cubes.grid;
    if functions.is_empty() {
        return Err(Error::InvalidArgument("need at least one test function".into()));
    }
    let vol = grid.cell_volume();
    struct Prepared {
        norm2: f64,
        l2f: Vec<f64>,
        l_l2f: Vec<f64>,
    }
    let prepared = functions
        .iter()
        .map(|f| {
            let norm2 = grid.weighted_lp(f, None, 2.0).powi(2);
            if norm2 == 0.0 {
                return Err(Error::InvalidArgument("test functions must be nonzero".into()));
            }
            let l2f = maximal_function(f, 2, cubes)?;
            let l_l2f = maximal_function(&l2f, 1, cubes)?;
            Ok(Prepared { norm2, l2f, l_l2f })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (levels, kernel) in kernels {
        let (mut constant, mut tstar_bound, mut mtn_bound) = (0.0f64, 0.0f64, 0.0f64);
        let mut first_curve = Vec::new();
        for (k, (f, pre)) in functions.iter().zip(&prepared).enumerate() {
            let gm = grand_maximal(kernel, cubes, f);
            let tf = kernel.apply(grid, f);
            let l_tf = maximal_function(&tf, 1, cubes)?;
            let top = gm.tstar.iter().copied().fold(0.0, f64::max);
            let curve: Vec<LevelSetPoint> = (1..=lambdas)
                .map(|i| {
                    let lambda = top * i as f64 / (lambdas + 1) as f64;
                    let count = gm.tstar.iter().filter(|&&v| v > lambda).count();
                    LevelSetPoint { lambda, measure: count as f64 * vol }
                })
                .collect();
            constant = constant.max(curve.iter().map(|c| c.lambda * c.lambda * c.measure / pre.norm2).fold(0.0, f64::max));
            let ratio = |num: &[f64], den: &dyn Fn(usize) -> f64| {
                (0..grid.len()).filter(|&p| den(p) > 0.0).map(|p| num[p] / den(p)).fold(0.0, f64::max)
            };
            tstar_bound = tstar_bound.max(ratio(&gm.tstar, &|p| l_tf[p] + pre.l2f[p] + pre.l_l2f[p]));
            mtn_bound = mtn_bound.max(ratio(&gm.mtn, &|p| pre.l2f[p] + gm.tstar[p]));
            if k == 0 {
                first_curve = curve;
            }
        }
        rows.push(WeakTypeRow { levels: *levels, constant, curve: first_curve, tstar_bound, mtn_bound });
    }
    let s = spread(rows.iter().map(|r| r.constant));
    let ts = spread(rows.iter().map(|r| r.tstar_bound));
    let ms = spread(rows.iter().map(|r| r.mtn_bound));
    Ok(WeakTypeReport { pass: s <= 2.0, spread: s, tstar_spread: ts, mtn_spread: ms, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedRow {
    pub weight: String,
    /// `[w]_{A_{p/2}}`.
    pub characteristic: f64,
    pub max_ratio: f64,
    /// `max_ratio / [w]^{max(1, 1/(p−2))}`.
    pub scaled: f64,
    /// `max_ratio / [w]^{max(1/2, 1/(p−2))}`.
    pub scaled_alt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedReport {
    pub kernel: String,
    pub p: f64,
    pub exponent: f64,
    pub exponent_alt: f64,
    pub rows: Vec<WeightedRow>,
    pub fitted_c: f64,
    pub fitted_c_alt: f64,
    /// Discrete Schur bound of the operator, the `w ≡ 1` ceiling.
    pub schur_bound: f64,
}

/// `‖T^N f‖_{L^p(w)} / ‖f‖_{L^p(w)}` over a test family and a weight family, against `[w]_{A_{p/2}}`.
pub fn weighted_norm_experiment(
    kernel: &GroupKernel,
    cubes: &CubeSystem,
    weights: &[Weight],
    p: f64,
    functions: &[Vec<f64>],
) -> Result<WeightedReport> {
    if !(p > 2.0) {
        return Err(Error::Unsupported(format!("the weighted experiment needs p > 2, got {p}")));
    }
    let grid = &cubes.grid;
    let images: Vec<Vec<f64>> = functions.iter().map(|f| kernel.apply(grid, f)).collect();
    let exponent = 1f64.max(1.0 / (p - 2.0));
    let exponent_alt = 0.5f64.max(1.0 / (p - 2.0));
    let mut rows = Vec::new();
    for w in weights {
        let characteristic = ap_characteristic(w, p / 2.0, cubes)?;
        let max_ratio = functions
            .iter()
            .zip(&images)
            .map(|(f, tf)| grid.weighted_lp(tf, Some(&w.values), p) / grid.weighted_lp(f, Some(&w.values), p))
            .fold(0.0, f64::max);
        rows.push(WeightedRow {
            weight: w.label.clone(),
            characteristic,
            max_ratio,
            scaled: max_ratio / characteristic.powf(exponent),
            scaled_alt: max_ratio / characteristic.powf(exponent_alt),
        });
    }
    let fitted_c = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let fitted_c_alt = rows.iter().map(|r| r.scaled_alt).fold(0.0, f64::max);
    Ok(WeightedReport {
        kernel: kernel.label.clone(),
        p,
        exponent,
        exponent_alt,
        rows,
        fitted_c,
        fitted_c_alt,
        schur_bound: kernel.schur_bound(grid),
    })
}
