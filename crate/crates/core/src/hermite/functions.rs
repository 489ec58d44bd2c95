use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest per-coordinate degree accepted by [`hermite_eval`].
pub const MAX_STABLE_DEGREE: usize = 200;

/// `h_0(x), …, h_k(x)` for the L²-normalised Hermite functions
/// `h_j(x) = (2^j j! √π)^{-1/2} H_j(x) e^{-x²/2}`.
pub fn hermite_functions<T: Real>(k: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(k + 1);
    let h0 = T::lit(std::f64::consts::PI).powf(T::lit(-0.25)) * (-x * x / T::lit(2.0)).exp();
    out.push(h0);
    if k == 0 {
        return out;
    }
    out.push(T::lit(2.0).sqrt() * x * h0);
    for j in 2..=k {
        let jf = T::count(j);
        let next = (T::lit(2.0) / jf).sqrt() * x * out[j - 1]
            - ((jf - T::one()) / jf).sqrt() * out[j - 2];
        out.push(next);
    }
    out
}

/// Single normalised Hermite function `h_k(x)`.
pub fn hermite_function<T: Real>(k: usize, x: T) -> T {
    hermite_functions(k, x)[k]
}

/// `h_0'(x), …, h_k'(x)` via `h_j' = √(j/2) h_{j-1} − √((j+1)/2) h_{j+1}`.
pub fn hermite_function_derivatives<T: Real>(k: usize, x: T) -> Vec<T> {
    let h = hermite_functions(k + 1, x);
    (0..=k)
        .map(|j| {
            let down = if j == 0 {
                T::zero()
            } else {
                (T::count(j) / T::lit(2.0)).sqrt() * h[j - 1]
            };
            down - (T::count(j + 1) / T::lit(2.0)).sqrt() * h[j + 1]
        })
        .collect()
}

/// Scaled Hermite values `|λ|^{1/4} h_j(|λ|^{1/2} ξ)` for `j ≤ k` in one coordinate.
pub fn scaled_hermite_functions<T: Real>(k: usize, lambda: T, xi: T) -> Vec<T> {
    let s = lambda.abs();
    let pre = s.powf(T::lit(0.25));
    hermite_functions(k, s.sqrt() * xi).into_iter().map(|v| v * pre).collect()
}

/// `Φ_μ^λ(ξ) = |λ|^{n/4} Π_j h_{μ_j}(|λ|^{1/2} ξ_j)`.
pub fn hermite_eval<T: Real>(mu: &[usize], lambda: T, xi: &[T]) -> Result<T> {
    if mu.len() != xi.len() {
        return Err(Error::InvalidArgument(format!(
            "multi-index has {} coordinates but the point has {}",
            mu.len(),
            xi.len()
        )));
    }
    if lambda == T::zero() {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    if let Some(&d) = mu.iter().find(|&&d| d > MAX_STABLE_DEGREE) {
        return Err(Error::DegreeOutOfRange { degree: d, max: MAX_STABLE_DEGREE });
    }
    let s = lambda.abs();
    let mut v = T::one();
    for (&m, &x) in mu.iter().zip(xi) {
        v *= s.powf(T::lit(0.25)) * hermite_function(m, s.sqrt() * x);
    }
    Ok(v)
}

/// Gauss–Hermite rule for the weight `e^{-x²}`: nodes ascending, weights positive.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let m = order;
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let half = m.div_ceil(2);
    let mf = m as f64;
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=m {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * mf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / (pp * pp);
        x[m - 1 - i] = -z;
        w[m - 1 - i] = w[i];
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
