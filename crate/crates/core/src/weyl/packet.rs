use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::HPoint;

/// Gaussian wave packet on `ℂⁿ`: `A·exp(−a|z−z₀|² + i(p·x + q·y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZPacket {
    pub amplitude: Complex64,
    pub width: f64,
    pub center: Vec<Complex64>,
    /// Momentum `(p_j, q_j)` packed as `p_j + i q_j`.
    pub momentum: Vec<Complex64>,
}

impl ZPacket {
    pub fn gaussian(n: usize, width: f64) -> Self {
        ZPacket {
            amplitude: Complex64::new(1.0, 0.0),
            width,
            center: vec![Complex64::new(0.0, 0.0); n],
            momentum: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Seeded packet with width `a ∈ a₀·[0.7, 1.3]` and small shifts and momenta.
    pub fn random(rng: &mut impl Rng, n: usize, base_width: f64) -> Self {
        let c = |rng: &mut dyn rand::RngCore, s: f64| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
        ZPacket {
            amplitude: Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..2.0 * PI)),
            width: base_width * rng.gen_range(0.7..1.3),
            center: (0..n).map(|_| c(rng, 0.5)).collect(),
            momentum: (0..n).map(|_| c(rng, 0.3)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut e = Complex64::new(0.0, 0.0);
        for j in 0..z.len() {
            let d = z[j] - self.center[j];
            e += -self.width * d.norm_sqr();
            e += Complex64::new(0.0, self.momentum[j].re * z[j].re + self.momentum[j].im * z[j].im);
        }
        self.amplitude * e.exp()
    }

    /// `∂_{x_j}` and `∂_{y_j}` of the packet.
    pub fn gradient(&self, j: usize, z: &[Complex64]) -> (Complex64, Complex64) {
        let v = self.eval(z);
        let d = z[j] - self.center[j];
        let gx = Complex64::new(-2.0 * self.width * d.re, self.momentum[j].re);
        let gy = Complex64::new(-2.0 * self.width * d.im, self.momentum[j].im);
        (gx * v, gy * v)
    }

    /// `∂_{z_j} = ½(∂_x − i∂_y)`.
    pub fn d_z(&self, j: usize, z: &[Complex64]) -> Complex64 {
        let (gx, gy) = self.gradient(j, z);
        0.5 * (gx - Complex64::i() * gy)
    }

    /// `∂_{z̄_j} = ½(∂_x + i∂_y)`.
    pub fn d_zbar(&self, j: usize, z: &[Complex64]) -> Complex64 {
        let (gx, gy) = self.gradient(j, z);
        0.5 * (gx + Complex64::i() * gy)
    }

    /// Exact `‖g‖²_{L²}`.
    pub fn l2_norm_sqr(&self) -> f64 {
        let a = self.width;
        let per = PI / (2.0 * a);
        self.amplitude.norm_sqr() * per.powi(self.dim() as i32)
    }
}

/// Packet on `Hⁿ`: a [`ZPacket`] times `exp(−(t−t₀)²/(2σ²)) e^{−iλ₀t}`.
///
/// Its slice is known exactly: `f^λ(z) = g(z)·σ√(2π)·e^{−σ²(λ−λ₀)²/2}·e^{i(λ−λ₀)t₀}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub z_part: ZPacket,
    pub t_center: f64,
    pub t_width: f64,
    pub lambda_center: f64,
}

impl WavePacket {
    /// Seeded packet with `λ₀ = ±2`, `σ = 3`, `|t₀| ≤ 1` and a z-part of width about `|λ₀|/5`.
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        WavePacket {
            z_part: ZPacket::random(rng, n, 0.4),
            t_center: rng.gen_range(-1.0..1.0),
            t_width: 3.0,
            lambda_center: 2.0 * sign,
        }
    }

    pub fn t_profile(&self, t: f64) -> Complex64 {
        let s = (t - self.t_center) / self.t_width;
        Complex64::from_polar((-0.5 * s * s).exp(), -self.lambda_center * t)
    }

    pub fn eval(&self, p: &HPoint) -> Complex64 {
        self.z_part.eval(&p.z) * self.t_profile(p.t)
    }

    /// `∫ e^{−(t−t₀)²/(2σ²)} e^{−iλ₀t} e^{iλt} dt`.
    pub fn slice_factor(&self, lambda: f64) -> Complex64 {
        let d = lambda - self.lambda_center;
        let sg = self.t_width;
        Complex64::from_polar(sg * (2.0 * PI).sqrt() * (-0.5 * sg * sg * d * d).exp(), d * self.t_center)
    }

    /// `∂_λ` of [`Self::slice_factor`].
    pub fn slice_factor_derivative(&self, lambda: f64) -> Complex64 {
        let d = lambda - self.lambda_center;
        self.slice_factor(lambda) * Complex64::new(-self.t_width * self.t_width * d, self.t_center)
    }

    pub fn slice(&self, lambda: f64, z: &[Complex64]) -> Complex64 {
        self.z_part.eval(z) * self.slice_factor(lambda)
    }

    /// Exact `‖f‖²_{L²(Hⁿ)}`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.z_part.l2_norm_sqr() * self.t_width * PI.sqrt()
    }
}
