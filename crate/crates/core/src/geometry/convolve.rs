use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{GridFunction, HFunction, Warned};
use super::point::{group_inv, group_mul};
use crate::HPoint;

fn boundary_warning(g: &dyn HFunction, f: &GridFunction) -> Option<String> {
    let probe = GridFunction::from_fn(&f.zgrid, f.tgrid, &|p: &HPoint| g.eval(p));
    let frac = probe.shell_fraction();
    (frac > 0.01).then(|| format!("kernel carries {:.2}% of its L1 mass in the outer shell", 100.0 * frac))
}

/// `(f∗g)(p) = ∫ f(q) g(q⁻¹p) dq` at the given points, by quadrature over `f`'s grid.
pub fn convolve_at(f: &GridFunction, g: &dyn HFunction, points: &[HPoint]) -> Vec<Complex64> {
    let w = f.weight();
    let inv: Vec<HPoint> = (0..f.len()).map(|k| group_inv(&f.point(k))).collect();
    points
        .par_iter()
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, qi) in inv.iter().enumerate() {
                let v = f.values[k];
                if v.re != 0.0 || v.im != 0.0 {
                    acc += v * g.eval(&group_mul(qi, p));
                }
            }
            acc * w
        })
        .collect()
}

/// Group convolution sampled back onto `f`'s grid.
///
/// Warns when `g`, sampled on the same grid, has more than 1% of its L¹ mass
/// in the outer 10% shell.
pub fn convolve(f: &GridFunction, g: &dyn HFunction) -> Warned<GridFunction> {
    let warnings = boundary_warning(g, f).into_iter().collect();
    let points: Vec<HPoint> = (0..f.len()).map(|k| f.point(k)).collect();
    let values = convolve_at(f, g, &points);
    Warned { value: GridFunction { zgrid: f.zgrid.clone(), tgrid: f.tgrid, values }, warnings }
}
