use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::calculus::{spectral_multiplier, SymbolFunction};
use super::space::DiscreteSpace;
use crate::error::{Error, Result};

/// A closed ball `B(c, r)` standing in for a dyadic cube.
#[derive(Debug, Clone, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    /// Members of `B(c, 3r)`.
    pub tripled: Vec<usize>,
}

/// All balls `B(x, 2^k)` with `2^k ≤ diam`, every point a centre.
#[derive(Debug, Clone, Serialize)]
pub struct BallSystem {
    pub radii: Vec<f64>,
    pub balls: Vec<Ball>,
}

impl BallSystem {
    pub fn new(space: &DiscreteSpace) -> Self {
        let diam = space.diameter();
        let mut radii = vec![1.0];
        while radii.last().unwrap() * 2.0 <= diam {
            radii.push(radii.last().unwrap() * 2.0);
        }
        let balls = radii
            .iter()
            .flat_map(|&r| {
                (0..space.len()).map(move |c| Ball { center: c, radius: r, members: space.ball(c, r), tripled: space.ball(c, 3.0 * r) })
            })
            .collect();
        BallSystem { radii, balls }
    }

    /// `(M|g|^order)^{1/order}` with `M` the maximal average over the balls containing a point.
    pub fn maximal(&self, space: &DiscreteSpace, g: &[f64], order: i32) -> Vec<f64> {
        let mu = &space.measure;
        let mut out: Vec<f64> = g.iter().map(|v| v.abs()).collect();
        for b in &self.balls {
            let mass: f64 = b.members.iter().map(|&i| mu[i]).sum();
            let avg = (b.members.iter().map(|&i| g[i].abs().powi(order) * mu[i]).sum::<f64>() / mass).powf(1.0 / order as f64);
            for &i in &b.members {
                out[i] = out[i].max(avg);
            }
        }
        out
    }
}

/// `M_{F(L)}f(x) = sup_{Q∋x} max_{ξ∈Q} |F(L)(fχ_{X∖3Q})(ξ)|` over the balls of the system.
pub fn maximal_mfl(balls: &BallSystem, op: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    let peaks = far_peaks(balls, &[op], f);
    spread_peaks(balls, f.len(), &peaks, 0)
}

/// For each ball and operator, `max_{ξ∈Q}|A(fχ_{X∖3Q})(ξ)|`.
fn far_peaks(balls: &BallSystem, ops: &[&DMatrix<f64>], f: &[f64]) -> Vec<Vec<f64>> {
    balls
        .balls
        .par_iter()
        .map(|b| {
            let mut g = DVector::from_column_slice(f);
            for &i in &b.tripled {
                g[i] = 0.0;
            }
            if g.iter().all(|&v| v == 0.0) {
                return vec![0.0; ops.len()];
            }
            ops.iter()
                .map(|op| {
                    let h = *op * &g;
                    b.members.iter().map(|&i| h[i].abs()).fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

fn spread_peaks(balls: &BallSystem, n: usize, peaks: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; n];
    for (b, p) in balls.balls.iter().zip(peaks) {
        for &i in &b.members {
            out[i] = out[i].max(p[k]);
        }
    }
    out
}

/// Seeded Gaussian packet `A·exp(−d(x,c)²/w²)·cos(ω d(x,c) + φ)` on a space.
#[derive(Debug, Clone, Serialize)]
pub struct GraphPacket {
    pub amplitude: f64,
    pub center: usize,
    pub width: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl GraphPacket {
    pub fn random(rng: &mut impl Rng, space: &DiscreteSpace) -> Self {
        let diam = space.diameter();
        GraphPacket {
            amplitude: rng.gen_range(0.5..2.0),
            center: rng.gen_range(0..space.len()),
            width: rng.gen_range(0.1..0.3) * diam,
            frequency: rng.gen_range(0.0..1.5),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn sample(&self, space: &DiscreteSpace) -> Vec<f64> {
        (0..space.len())
            .map(|x| {
                let d = space.distance[(x, self.center)];
                self.amplitude * (-(d * d) / (self.width * self.width)).exp() * (self.frequency * d + self.phase).cos()
            })
            .collect()
    }
}

pub fn random_graph_functions(rng: &mut impl Rng, space: &DiscreteSpace, count: usize) -> Vec<(GraphPacket, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let p = GraphPacket::random(rng, space);
            let f = p.sample(space);
            (p, f)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitParams {
    /// Scale exponent in `e^{−r^m L}`.
    pub m: f64,
    /// Power `N` of `(I − e^{−r^m L})`.
    pub power: i32,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { m: 2.0, power: 2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalRow {
    /// `max_x M_{F(L)}f / [(M|f|²)^{1/2} + (M|F(L)f|²)^{1/2}]`.
    pub ratio: f64,
    /// Same with the regular part `F(L)(I − e^{−r^m L})^N` against `(M|f|²)^{1/2}`.
    pub regular_ratio: f64,
    /// Remainder `F(L)(I − (I − e^{−r^m L})^N)` against `(M|F(L)f|²)^{1/2}`.
    pub remainder_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalReport {
    pub space: String,
    pub symbol: String,
    pub params: SplitParams,
    pub rows: Vec<MaximalRow>,
    pub fitted_c: f64,
    /// Largest over smallest per-function ratio.
    pub spread: f64,
    pub pass: bool,
}

fn max_ratio(num: &[f64], den: &[f64]) -> f64 {
    num.iter().zip(den).filter(|(_, &d)| d > 1e-300).map(|(n, d)| n / d).fold(0.0, f64::max)
}

/// Fits `C` in `M_{F(L)}f ≤ C[(M|f|²)^{1/2} + (M|F(L)f|²)^{1/2}]` over the test functions and
/// reports the regular part / remainder split used to prove it.
pub fn verify_maximal_bound(
    space: &DiscreteSpace,
    balls: &BallSystem,
    symbol: &SymbolFunction,
    functions: &[Vec<f64>],
    params: SplitParams,
) -> Result<MaximalReport> {
    if functions.is_empty() {
        return Err(Error::InvalidArgument("need at least one test function".into()));
    }
    let op = spectral_multiplier(space, symbol);
    let regular: Vec<DMatrix<f64>> = balls
        .radii
        .iter()
        .map(|&r| {
            let (m, n) = (params.m, params.power);
            let s = symbol.clone();
            let g = SymbolFunction::new("regular", move |x| s.eval(x) * (1.0 - (-r.powf(m) * x).exp()).powi(n));
            spectral_multiplier(space, &g)
        })
        .collect();
    let remainder: Vec<DMatrix<f64>> = regular.iter().map(|g| &op - g).collect();
    let mut rows = Vec::new();
    for f in functions {
        let tf: Vec<f64> = (&op * DVector::from_column_slice(f)).iter().copied().collect();
        let mf = balls.maximal(space, f, 2);
        let mtf = balls.maximal(space, &tf, 2);
        let (mut full, mut reg, mut rem) = (vec![0.0f64; f.len()], vec![0.0f64; f.len()], vec![0.0f64; f.len()]);
        for (k, &r) in balls.radii.iter().enumerate() {
            let sub = BallSystem { radii: vec![r], balls: balls.balls.iter().filter(|b| b.radius == r).cloned().collect() };
            let peaks = far_peaks(&sub, &[&op, &regular[k], &remainder[k]], f);
            for (dst, j) in [(&mut full, 0), (&mut reg, 1), (&mut rem, 2)] {
                for (d, v) in dst.iter_mut().zip(spread_peaks(&sub, f.len(), &peaks, j)) {
                    *d = d.max(v);
                }
            }
        }
        let both: Vec<f64> = mf.iter().zip(&mtf).map(|(a, b)| a + b).collect();
        rows.push(MaximalRow { ratio: max_ratio(&full, &both), regular_ratio: max_ratio(&reg, &mf), remainder_ratio: max_ratio(&rem, &mtf) });
    }
    let fitted_c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let smallest = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = if smallest > 0.0 { fitted_c / smallest } else if fitted_c == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(MaximalReport {
        space: space.label.clone(),
        symbol: symbol.label.clone(),
        params,
        rows,
        fitted_c,
        spread,
        pass: spread <= 2.0,
    })
}
