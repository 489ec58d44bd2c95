use serde::Serialize;

use crate::error::{Error, Result};
use crate::HPoint;

/// Cell-centred uniform grid on the box `[−L,L]^{2n} × [−L²,L²]`.
///
/// Coordinates are stored flat with stride `2n+1` as `(x_1..x_n, y_1..y_n, t)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxGrid {
    dim: usize,
    half_width: f64,
    z_points: usize,
    t_points: usize,
    #[serde(skip)]
    coords: Vec<f64>,
}

impl BoxGrid {
    pub fn new(dim: usize, half_width: f64, z_points: usize, t_points: usize) -> Result<Self> {
        if dim == 0 || !(half_width > 0.0) || z_points < 2 || t_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "box grid needs n ≥ 1, L > 0 and at least 2 points per axis (got n={dim}, L={half_width}, {z_points}, {t_points})"
            )));
        }
        let stride = 2 * dim + 1;
        let hz = 2.0 * half_width / z_points as f64;
        let ht = 2.0 * half_width * half_width / t_points as f64;
        let count = z_points.pow(2 * dim as u32) * t_points;
        let mut coords = Vec::with_capacity(count * stride);
        let mut idx = vec![0usize; stride];
        for _ in 0..count {
            for &i in &idx[..stride - 1] {
                coords.push(-half_width + (i as f64 + 0.5) * hz);
            }
            coords.push(-half_width * half_width + (idx[stride - 1] as f64 + 0.5) * ht);
            // odometer with t fastest
            for a in (0..stride).rev() {
                idx[a] += 1;
                let top = if a == stride - 1 { t_points } else { z_points };
                if idx[a] < top {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(BoxGrid { dim, half_width, z_points, t_points, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (2 * self.dim + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn hz(&self) -> f64 {
        2.0 * self.half_width / self.z_points as f64
    }

    pub fn ht(&self) -> f64 {
        2.0 * self.half_width * self.half_width / self.t_points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.hz().powi(2 * self.dim as i32) * self.ht()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim + 1;
        &self.coords[i * s..(i + 1) * s]
    }

    pub fn to_hpoint(&self, i: usize) -> HPoint {
        let p = self.point(i);
        let n = self.dim;
        HPoint::from_xyt(&p[..n], &p[n..2 * n], p[2 * n])
    }

    pub fn sample(&self, f: impl Fn(&HPoint) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.to_hpoint(i))).collect()
    }

    /// `ρ` of the grid point.
    pub fn rho(&self, i: usize) -> f64 {
        let (s2, t) = offset_from_origin(self.point(i), self.dim);
        s2 * s2 + t * t
    }

    /// `|q⁻¹p|` between grid points.
    pub fn quasi_distance(&self, p: usize, q: usize) -> f64 {
        let (s2, t) = group_offset(self.point(p), self.point(q), self.dim);
        (s2 * s2 + t * t).sqrt().sqrt()
    }

    /// Grid points within quasi-distance `< radius` of `center`.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.len()).filter(|&q| self.quasi_distance(q, center) < radius).collect()
    }

    /// Points in the inner half box `[−L/2,L/2]^{2n} × [−L²/4,L²/4]`.
    pub fn in_inner_half(&self, i: usize) -> bool {
        let p = self.point(i);
        let n = self.dim;
        let l = self.half_width;
        p[..2 * n].iter().all(|x| x.abs() <= l / 2.0) && p[2 * n].abs() <= l * l / 4.0
    }

    /// `∫ |f|^p w` as a grid sum.
    pub fn weighted_lp(&self, f: &[f64], w: Option<&[f64]>, p: f64) -> f64 {
        let sum: f64 = match w {
            Some(w) => f.iter().zip(w).map(|(v, w)| v.abs().powf(p) * w).sum(),
            None => f.iter().map(|v| v.abs().powf(p)).sum(),
        };
        (sum * self.cell_volume()).powf(1.0 / p)
    }
}

/// `(|z|², t)` of `q⁻¹p` for flat coordinates.
#[inline]
pub fn group_offset(p: &[f64], q: &[f64], n: usize) -> (f64, f64) {
    let mut s2 = 0.0;
    let mut twist = 0.0;
    for j in 0..n {
        let (dx, dy) = (p[j] - q[j], p[n + j] - q[n + j]);
        s2 += dx * dx + dy * dy;
        twist += q[n + j] * p[j] - q[j] * p[n + j];
    }
    (s2, p[2 * n] - q[2 * n] - 0.5 * twist)
}

#[inline]
fn offset_from_origin(p: &[f64], n: usize) -> (f64, f64) {
    let s2: f64 = p[..2 * n].iter().map(|x| x * x).sum();
    (s2, p[2 * n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{group_inv, group_mul, rho};

    #[test]
    fn grid_layout() {
        let g = BoxGrid::new(1, 1.0, 4, 6).unwrap();
        assert_eq!(g.len(), 96);
        assert_eq!(g.point(0), &[-0.75, -0.75, -1.0 + 1.0 / 6.0]);
        assert_eq!(g.point(1)[2], -1.0 + 0.5);
        let total = g.cell_volume() * g.len() as f64;
        assert!((total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn offset_matches_group_law() {
        let g = BoxGrid::new(1, 1.0, 5, 7).unwrap();
        for (p, q) in [(3, 40), (100, 7), (55, 55)] {
            let d = group_mul(&group_inv(&g.to_hpoint(q)), &g.to_hpoint(p));
            let (s2, t) = group_offset(g.point(p), g.point(q), 1);
            assert!((s2 - d.z_norm_sqr()).abs() < 1e-14);
            assert!((t - d.t).abs() < 1e-14);
            assert!((g.quasi_distance(p, q).powi(4) - rho(&d)).abs() < 1e-12);
        }
        assert_eq!(g.quasi_distance(9, 9), 0.0);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(BoxGrid::new(0, 1.0, 4, 4).is_err());
        assert!(BoxGrid::new(1, -1.0, 4, 4).is_err());
        assert!(BoxGrid::new(1, 1.0, 1, 4).is_err());
    }
}
