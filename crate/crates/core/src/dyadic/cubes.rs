use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::BoxGrid;
use crate::error::{Error, Result};

/// One cell `Q_α^j` of a dyadic system: the grid points it owns, its centre and its tree links.
#[derive(Debug, Clone, Serialize)]
pub struct Cube {
    pub level: usize,
    pub center: usize,
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Per-level geometry of the cube system.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub cubes: usize,
    /// Smallest inscribed-ball radius over the level, in quasi-distance.
    pub inner_radius: f64,
    /// Largest circumscribed-ball radius over the level.
    pub outer_radius: f64,
    /// Fraction of grid mass not owned by any cube of the level.
    pub coverage_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeReport {
    pub eta: f64,
    /// `ℓ_j = unit·η^j` is the side length: `B(c, ℓ_j) ⊂ Q ⊂ B(c, a·ℓ_j)`.
    pub unit: f64,
    pub a: f64,
    pub levels: Vec<LevelReport>,
}

/// Christ-type dyadic cubes on a [`BoxGrid`], built from nested maximal separated nets.
///
/// Level `j` uses a net with separation `scale·η^j`; the finest cells are the
/// Voronoi cells of the finest net and coarser cells are unions of children,
/// each child going to the nearest centre of the coarser net.
#[derive(Debug, Clone)]
pub struct CubeSystem {
    pub grid: Arc<BoxGrid>,
    pub cubes: Vec<Cube>,
    /// Cube ids per level, coarsest first.
    pub levels: Vec<Vec<usize>>,
    /// `owner[j][p]` is the level-`j` cube containing grid point `p`.
    pub owner: Vec<Vec<usize>>,
    pub report: CubeReport,
}

fn nearest(grid: &BoxGrid, p: usize, centers: &[usize]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, &c) in centers.iter().enumerate() {
        let d = grid.quasi_distance(p, c);
        // ties go to the earlier centre
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

pub fn build_cube_system(grid: Arc<BoxGrid>, levels: usize, eta: f64, scale: f64) -> Result<CubeSystem> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta must lie in (0,1), got {eta}")));
    }
    if levels == 0 || !(scale > 0.0) {
        return Err(Error::InvalidArgument("need at least one level and a positive scale".into()));
    }
    let np = grid.len();
    // nested nets: each level starts from the previous centres
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(levels);
    for j in 0..levels {
        let sep = scale * eta.powi(j as i32);
        let mut net: Vec<usize> = nets.last().cloned().unwrap_or_default();
        for p in 0..np {
            if net.iter().all(|&c| grid.quasi_distance(p, c) >= sep) {
                net.push(p);
            }
        }
        if j > 0 && net.len() == nets[j - 1].len() {
            return Err(Error::InvalidArgument(format!(
                "grid too coarse: level {j} (separation {sep:.3}) adds no new centres"
            )));
        }
        nets.push(net);
    }

    let mut cubes: Vec<Cube> = Vec::new();
    let mut level_ids: Vec<Vec<usize>> = Vec::with_capacity(levels);
    for (j, net) in nets.iter().enumerate() {
        let base = cubes.len();
        level_ids.push((base..base + net.len()).collect());
        for &c in net {
            cubes.push(Cube { level: j, center: c, members: Vec::new(), parent: None, children: Vec::new() });
        }
    }
    // finest level: Voronoi cells
    let fine = levels - 1;
    let fine_owner: Vec<usize> =
        (0..np).into_par_iter().map(|p| level_ids[fine][nearest(&grid, p, &nets[fine])]).collect();
    // coarser levels: parent of each cube is the nearest coarser centre (its own centre if it is one)
    for j in (0..fine).rev() {
        for k in 0..nets[j + 1].len() {
            let child = level_ids[j + 1][k];
            let c = cubes[child].center;
            let parent = level_ids[j][nearest(&grid, c, &nets[j])];
            cubes[child].parent = Some(parent);
            cubes[parent].children.push(child);
        }
    }
    let mut owner = vec![vec![0usize; np]; levels];
    owner[fine] = fine_owner;
    for j in (0..fine).rev() {
        for p in 0..np {
            owner[j][p] = cubes[owner[j + 1][p]].parent.expect("every non-root cube has a parent");
        }
    }
    for (j, own) in owner.iter().enumerate() {
        for (p, &q) in own.iter().enumerate() {
            debug_assert_eq!(cubes[q].level, j);
            cubes[q].members.push(p);
        }
    }
    if cubes.iter().any(|c| c.members.is_empty()) {
        return Err(Error::InvalidArgument("an empty cube was produced; refine the grid".into()));
    }

    // inscribed radius: distance from the centre to the nearest non-member point
    let radii: Vec<(f64, f64)> = cubes
        .par_iter()
        .map(|q| {
            let own = &owner[q.level];
            let id = own[q.center];
            let mut inner = f64::INFINITY;
            let mut outer = 0.0f64;
            for p in 0..np {
                let d = grid.quasi_distance(p, q.center);
                if own[p] == id {
                    outer = outer.max(d);
                } else {
                    inner = inner.min(d);
                }
            }
            (inner, outer)
        })
        .collect();
    let mut reports = Vec::new();
    let mut unit = f64::INFINITY;
    for (j, ids) in level_ids.iter().enumerate() {
        let inner = ids.iter().map(|&i| radii[i].0).fold(f64::INFINITY, f64::min);
        let outer = ids.iter().map(|&i| radii[i].1).fold(0.0, f64::max);
        unit = unit.min(inner / eta.powi(j as i32));
        let owned: usize = ids.iter().map(|&i| cubes[i].members.len()).sum();
        reports.push(LevelReport {
            level: j,
            cubes: ids.len(),
            inner_radius: inner,
            outer_radius: outer,
            coverage_defect: 1.0 - owned as f64 / np as f64,
        });
    }
    let a = reports.iter().map(|r| r.outer_radius / (unit * eta.powi(r.level as i32))).fold(0.0, f64::max);
    // the balls are half-open, so nudge `a` past the farthest member
    let a = a * (1.0 + 1e-12);
    Ok(CubeSystem { grid, cubes, levels: level_ids, owner, report: CubeReport { eta, unit, a, levels: reports } })
}

impl CubeSystem {
    pub fn side(&self, level: usize) -> f64 {
        self.report.unit * self.report.eta.powi(level as i32)
    }

    /// Radius of `γQ = B(c, aγℓ_j)`.
    pub fn dilated_radius(&self, cube: usize, gamma: f64) -> f64 {
        self.report.a * gamma * self.side(self.cubes[cube].level)
    }

    /// Grid points of `γQ`.
    pub fn dilated(&self, cube: usize, gamma: f64) -> Vec<usize> {
        self.grid.ball(self.cubes[cube].center, self.dilated_radius(cube, gamma))
    }

    /// All cubes (any level) that contain `p`, coarsest first.
    pub fn containing(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.owner.iter().map(move |own| own[p])
    }

    /// Descendants of `cube` (excluding itself), breadth first.
    pub fn descendants(&self, cube: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut frontier = self.cubes[cube].children.clone();
        while !frontier.is_empty() {
            out.extend_from_slice(&frontier);
            frontier = frontier.iter().flat_map(|&c| self.cubes[c].children.iter().copied()).collect();
        }
        out
    }

    /// Exhaustive check of the cube-system properties on the grid.
    pub fn verify(&self) -> PropertyCheck {
        let np = self.grid.len();
        // (1) coverage
        let coverage = self.report.levels.iter().map(|l| l.coverage_defect).fold(0.0, f64::max);
        // (2) nesting or disjointness for every pair l ≥ j
        let mut nesting = true;
        for q in &self.cubes {
            for j in 0..=q.level {
                let first = self.owner[j][q.members[0]];
                if q.members.iter().any(|&p| self.owner[j][p] != first) {
                    nesting = false;
                }
            }
        }
        let mut count = vec![0usize; self.cubes.len()];
        for own in &self.owner {
            for &c in own {
                count[c] += 1;
            }
        }
        let disjoint = count.iter().zip(&self.cubes).all(|(&k, q)| k == q.members.len())
            && self.owner.iter().all(|o| o.len() == np);
        // (3) unique ancestor on every coarser level via parent links
        let ancestors = self.cubes.iter().all(|q| {
            let mut cur = q.parent;
            let mut lvl = q.level;
            while let Some(p) = cur {
                if self.cubes[p].level + 1 != lvl || !q.members.iter().all(|&m| self.owner[lvl - 1][m] == p) {
                    return false;
                }
                lvl -= 1;
                cur = self.cubes[p].parent;
            }
            lvl == 0
        });
        // (4) B(c, ℓ_j) ⊂ Q ⊂ B(c, aℓ_j)
        let sandwich = self.cubes.par_iter().enumerate().all(|(id, q)| {
            let l = self.side(q.level);
            (0..np).all(|p| {
                let d = self.grid.quasi_distance(p, q.center);
                let inside = self.owner[q.level][p] == id;
                (d >= l || inside) && (!inside || d < self.report.a * l)
            })
        });
        PropertyCheck { coverage_defect: coverage, nesting: nesting && disjoint, unique_ancestor: ancestors, sandwich, a: self.report.a }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub coverage_defect: f64,
    pub nesting: bool,
    pub unique_ancestor: bool,
    pub sandwich: bool,
    pub a: f64,
}

impl PropertyCheck {
    pub fn all_hold(&self, max_a: f64, max_coverage_defect: f64) -> bool {
        self.nesting && self.unique_ancestor && self.sandwich && self.a <= max_a && self.coverage_defect <= max_coverage_defect
    }
}
