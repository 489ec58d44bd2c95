use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, HFunction};
use crate::HPoint;

/// Left-invariant vector fields `T = ∂_t`, `X_j = ∂_{x_j} + ½y_j∂_t`, `Y_j = ∂_{y_j} − ½x_j∂_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorField {
    T,
    X(usize),
    Y(usize),
}

/// `Z_j(λ) = ∂_{z_j} − (λ/4)z̄_j` and `Z̄_j(λ) = ∂_{z̄_j} + (λ/4)z_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZField {
    Z(usize),
    ZBar(usize),
}

fn diff_along(values: &[Complex64], idx: usize, stride: usize, pos: usize, count: usize, h: f64) -> Complex64 {
    if pos == 0 {
        (-values[idx] * 3.0 + values[idx + stride] * 4.0 - values[idx + 2 * stride]) / (2.0 * h)
    } else if pos == count - 1 {
        (values[idx] * 3.0 - values[idx - stride] * 4.0 + values[idx - 2 * stride]) / (2.0 * h)
    } else {
        (values[idx + stride] - values[idx - stride]) / (2.0 * h)
    }
}

/// Applies a vector field with second-order centered differences at grid spacing.
pub fn vector_field_apply(field: VectorField, f: &GridFunction) -> GridFunction {
    let nt = f.tgrid.count;
    let n = f.zgrid.dim();
    let zg = &f.zgrid;
    let dt = f.tgrid.spacing();
    let h = zg.spacing();
    let m = zg.nodes_per_axis();
    let values = (0..f.len())
        .into_par_iter()
        .map(|k| {
            let iz = k / nt;
            let it = k % nt;
            let d_t = || diff_along(&f.values, k, 1, it, nt, dt);
            let d_axis = |axis: usize| diff_along(&f.values, k, zg.stride(axis) * nt, zg.axis_index(iz, axis), m, h);
            match field {
                VectorField::T => d_t(),
                VectorField::X(j) => {
                    assert!(j < n);
                    d_axis(j) + d_t() * (0.5 * zg.point(iz)[j].im)
                }
                VectorField::Y(j) => {
                    assert!(j < n);
                    d_axis(n + j) - d_t() * (0.5 * zg.point(iz)[j].re)
                }
            }
        })
        .collect();
    GridFunction { zgrid: f.zgrid.clone(), tgrid: f.tgrid, values }
}

fn shifted(p: &HPoint, axis: usize, n: usize, s: f64) -> HPoint {
    let mut q = p.clone();
    if axis < n {
        q.z[axis].re += s;
    } else if axis < 2 * n {
        q.z[axis - n].im += s;
    } else {
        q.t += s;
    }
    q
}

fn central(f: &dyn HFunction, p: &HPoint, axis: usize, step: f64) -> Complex64 {
    let n = p.dim();
    (f.eval(&shifted(p, axis, n, step)) - f.eval(&shifted(p, axis, n, -step))) / (2.0 * step)
}

/// Pointwise vector field application with a centered difference of size `step`.
pub fn vector_field_at(field: VectorField, f: &dyn HFunction, p: &HPoint, step: f64) -> Complex64 {
    let n = p.dim();
    let dt = central(f, p, 2 * n, step);
    match field {
        VectorField::T => dt,
        VectorField::X(j) => central(f, p, j, step) + dt * (0.5 * p.z[j].im),
        VectorField::Y(j) => central(f, p, n + j, step) - dt * (0.5 * p.z[j].re),
    }
}

/// `Z_j(λ)h(z)` or `Z̄_j(λ)h(z)` with centered differences of size `step`.
pub fn z_field_apply(
    field: ZField,
    h: &dyn Fn(&[Complex64]) -> Complex64,
    lambda: f64,
    z: &[Complex64],
    step: f64,
) -> Complex64 {
    let partial = |j: usize, imag: bool| {
        let mut a = z.to_vec();
        let mut b = z.to_vec();
        let d = if imag { Complex64::new(0.0, step) } else { Complex64::new(step, 0.0) };
        a[j] += d;
        b[j] -= d;
        (h(&a) - h(&b)) / (2.0 * step)
    };
    let i = Complex64::i();
    match field {
        ZField::Z(j) => 0.5 * (partial(j, false) - i * partial(j, true)) - lambda / 4.0 * z[j].conj() * h(z),
        ZField::ZBar(j) => 0.5 * (partial(j, false) + i * partial(j, true)) + lambda / 4.0 * z[j] * h(z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{TGrid, ZGrid};
    use crate::geometry::point::Point;
    use std::sync::Arc;

    fn grid() -> (Arc<ZGrid>, TGrid) {
        (Arc::new(ZGrid::new(1, 2.0, 21).unwrap()), TGrid::new(2.0, 40).unwrap())
    }

    #[test]
    fn x_of_coordinate_is_one() {
        let (z, t) = grid();
        let f = GridFunction::from_fn(&z, t, &|p: &HPoint| Complex64::new(p.z[0].re, 0.0));
        let g = vector_field_apply(VectorField::X(0), &f);
        assert!(g.values.iter().all(|v| (v - 1.0).norm() < 1e-12));
    }

    #[test]
    fn t_kills_t_independent() {
        let (z, t) = grid();
        let f = GridFunction::from_fn(&z, t, &|p: &HPoint| Complex64::new(p.z[0].norm_sqr().sin(), 0.0));
        let g = vector_field_apply(VectorField::T, &f);
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn commutator_is_minus_t() {
        let f = |p: &HPoint| {
            let x = p.z[0].re;
            let y = p.z[0].im;
            Complex64::new((0.3 * x + 0.7 * y * y + p.t).sin(), (x * p.t).cos())
        };
        let p = Point::from_xyt(&[0.4], &[-0.3], 0.2);
        let mut prev = f64::INFINITY;
        for &h in &[1e-2, 5e-3] {
            let yf = |q: &HPoint| vector_field_at(VectorField::Y(0), &f, q, h);
            let xf = |q: &HPoint| vector_field_at(VectorField::X(0), &f, q, h);
            let xy = vector_field_at(VectorField::X(0), &yf, &p, h);
            let yx = vector_field_at(VectorField::Y(0), &xf, &p, h);
            let tf = vector_field_at(VectorField::T, &f, &p, 1e-6);
            let err = (xy - yx + tf).norm();
            assert!(err < 1e-3);
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn z_field_on_gaussian() {
        for &lam in &[0.8, -0.8] {
            let h = move |z: &[Complex64]| Complex64::new((-f64::abs(lam) * z[0].norm_sqr() / 4.0).exp(), 0.0);
            let z = [Complex64::new(0.3, -0.5)];
            let got = z_field_apply(ZField::Z(0), &h, lam, &z, 1e-5);
            let expect = -(lam + lam.abs()) * z[0].conj() / 4.0 * h(&z);
            assert!((got - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn z_bar_of_constant() {
        let h = |_: &[Complex64]| Complex64::new(2.0, 0.0);
        let z = [Complex64::new(0.3, -0.5)];
        let got = z_field_apply(ZField::ZBar(0), &h, 1.5, &z, 1e-4);
        assert!((got - 1.5 / 4.0 * z[0] * 2.0).norm() < 1e-12);
    }

    #[test]
    fn z_field_matches_left_invariant_fields() {
        let lam = 1.2;
        let h = |z: &[Complex64]| Complex64::new(z[0].re * (-z[0].norm_sqr()).exp(), z[0].im);
        let f = move |p: &HPoint| Complex64::from_polar(1.0, lam * p.t) * h(&p.z);
        let p = Point::from_xyt(&[0.2], &[0.5], 0.3);
        let step = 1e-4;
        let lhs = Complex64::from_polar(1.0, lam * p.t) * z_field_apply(ZField::Z(0), &h, lam, &p.z, step);
        let rhs = 0.5
            * (vector_field_at(VectorField::X(0), &f, &p, step)
                - Complex64::i() * vector_field_at(VectorField::Y(0), &f, &p, step));
        assert!((lhs - rhs).norm() < 1e-7);
    }
}
