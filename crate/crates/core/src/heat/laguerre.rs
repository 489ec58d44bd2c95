use crate::scalar::Real;

/// `L_0^a(x), …, L_k^a(x)` by the three-term recurrence.
pub fn laguerre_all<T: Real>(k: usize, a: T, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(T::one());
    if k == 0 {
        return out;
    }
    out.push(T::one() + a - x);
    for j in 1..k {
        let jf = T::count(j);
        let next = ((T::lit(2.0) * jf + T::one() + a - x) * out[j] - (jf + a) * out[j - 1]) / (jf + T::one());
        out.push(next);
    }
    out
}

/// Generalised Laguerre polynomial `L_k^a(x)`.
pub fn laguerre_eval<T: Real>(k: usize, a: T, x: T) -> T {
    laguerre_all(k, a, x)[k]
}

/// `φ_{k,λ}(z) = L_k^{n−1}(½|λ||z|²) e^{−¼|λ||z|²}`, given `|z|²`.
pub fn laguerre_function<T: Real>(k: usize, n: usize, lambda: T, z_norm_sqr: T) -> T {
    let s = lambda.abs() * z_norm_sqr;
    laguerre_eval(k, T::count(n) - T::one(), s / T::lit(2.0)) * (-s / T::lit(4.0)).exp()
}
