use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A point `(z, t)` of `Hⁿ = ℂⁿ × ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub z: Vec<Complex<T>>,
    pub t: T,
}

impl<T: Real> Point<T> {
    pub fn new(z: Vec<Complex<T>>, t: T) -> Self {
        Point { z, t }
    }

    pub fn origin(n: usize) -> Self {
        Point { z: vec![Complex::new(T::zero(), T::zero()); n], t: T::zero() }
    }

    /// Builds a point from real coordinates `x`, `y` and `t`.
    pub fn from_xyt(x: &[T], y: &[T], t: T) -> Self {
        Point { z: x.iter().zip(y).map(|(&a, &b)| Complex::new(a, b)).collect(), t }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `|z|² = Σ|z_j|²`.
    pub fn z_norm_sqr(&self) -> T {
        self.z.iter().fold(T::zero(), |acc, w| acc + w.norm_sqr())
    }
}

/// `Im(z·w̄) = Σ_j Im(z_j w̄_j)`.
pub fn symplectic<T: Real>(z: &[Complex<T>], w: &[Complex<T>]) -> T {
    z.iter().zip(w).fold(T::zero(), |acc, (a, b)| acc + a.im * b.re - a.re * b.im)
}

/// `(z,t)(w,s) = (z+w, t+s+½Im z·w̄)`.
pub fn group_mul<T: Real>(p: &Point<T>, q: &Point<T>) -> Point<T> {
    assert_eq!(p.dim(), q.dim(), "points of different dimension");
    Point {
        z: p.z.iter().zip(&q.z).map(|(a, b)| a + b).collect(),
        t: p.t + q.t + symplectic(&p.z, &q.z) / T::lit(2.0),
    }
}

pub fn group_inv<T: Real>(p: &Point<T>) -> Point<T> {
    Point { z: p.z.iter().map(|a| -a).collect(), t: -p.t }
}

/// `ρ(z,t) = |z|⁴ + t²`.
pub fn rho<T: Real>(p: &Point<T>) -> T {
    let s = p.z_norm_sqr();
    s * s + p.t * p.t
}

/// `|(z,t)| = ρ(z,t)^{1/4}`.
pub fn homogeneous_norm<T: Real>(p: &Point<T>) -> T {
    rho(p).sqrt().sqrt()
}

/// `δ_s(z,t) = (sz, s²t)`.
pub fn dilate<T: Real>(p: &Point<T>, s: T) -> Point<T> {
    Point { z: p.z.iter().map(|a| a * s).collect(), t: p.t * s * s }
}

/// Left-invariant quasi-distance `|q⁻¹p|`.
pub fn quasi_distance<T: Real>(p: &Point<T>, q: &Point<T>) -> T {
    homogeneous_norm(&group_mul(&group_inv(q), p))
}

/// Largest `|pq| / (|p| + |q|)` seen over the given pairs.
pub fn quasi_triangle_ratio<T: Real>(pairs: &[(Point<T>, Point<T>)]) -> T {
    pairs.iter().fold(T::zero(), |acc, (p, q)| {
        let den = homogeneous_norm(p) + homogeneous_norm(q);
        if den == T::zero() {
            acc
        } else {
            acc.max(homogeneous_norm(&group_mul(p, q)) / den)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::HPoint;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn pt(v: &[f64]) -> HPoint {
        let n = (v.len() - 1) / 2;
        HPoint::from_xyt(&v[..n], &v[n..2 * n], v[2 * n])
    }

    #[test]
    fn twisted_product_example() {
        let p = HPoint::new(vec![Complex64::new(1.0, 0.0)], 0.0);
        let q = HPoint::new(vec![Complex64::new(0.0, 1.0)], 0.0);
        let r = group_mul(&p, &q);
        assert_eq!(r.z[0], Complex64::new(1.0, 1.0));
        assert_eq!(r.t, -0.5);
    }

    #[test]
    fn norm_on_axes() {
        let p = pt(&[0.0, 0.0, 3.0]);
        assert_eq!(rho(&p), 9.0);
        let q = pt(&[1.0, 2.0, 0.0]);
        assert_eq!(rho(&q), 25.0);
    }

    #[test]
    fn quasi_triangle_constant_is_bounded() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..2000)
            .map(|_| {
                let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                (pt(&a), pt(&b))
            })
            .collect();
        let c = quasi_triangle_ratio(&pairs);
        assert!(c >= 0.5 && c < 2.0, "c = {c}");
    }

    fn arb_point(n: usize) -> impl Strategy<Value = HPoint> {
        prop::collection::vec(-3.0f64..3.0, 2 * n + 1).prop_map(|v| pt(&v))
    }

    proptest! {
        #[test]
        fn inverse_cancels(p in arb_point(2)) {
            let e = group_mul(&p, &group_inv(&p));
            prop_assert!(e.t.abs() < 1e-12 && e.z.iter().all(|w| w.norm() < 1e-12));
            prop_assert_eq!(group_inv(&group_inv(&p)), p);
        }

        #[test]
        fn associative(p in arb_point(1), q in arb_point(1), r in arb_point(1)) {
            let a = group_mul(&group_mul(&p, &q), &r);
            let b = group_mul(&p, &group_mul(&q, &r));
            prop_assert!((a.t - b.t).abs() < 1e-12);
            prop_assert!((a.z[0] - b.z[0]).norm() < 1e-12);
        }

        #[test]
        fn rho_is_homogeneous(p in arb_point(2), s in 0.05f64..5.0) {
            let lhs = rho(&dilate(&p, s));
            let rhs = s.powi(4) * rho(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn dilation_is_automorphism(p in arb_point(1), q in arb_point(1), s in 0.1f64..3.0) {
            let a = dilate(&group_mul(&p, &q), s);
            let b = group_mul(&dilate(&p, s), &dilate(&q, s));
            prop_assert!((a.t - b.t).abs() < 1e-10);
        }
    }
}
