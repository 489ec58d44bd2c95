use serde::Serialize;

use super::cubes::CubeSystem;
use crate::error::{Error, Result};

/// Knobs of the Calderón–Zygmund recursion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SparseParams {
    /// CZ height for `χ_E`, `2^{−(2n+3)}` by default.
    pub height: f64,
    /// Largest admissible `|E|/|Q|`, `2^{−(2n+4)}` by default.
    pub exceptional_fraction: f64,
    /// `α` is the first of `α₀·2^{k/2}` for which `E` is small enough.
    pub alpha_start: f64,
    pub max_depth: usize,
}

impl SparseParams {
    pub fn for_dim(n: usize) -> Self {
        SparseParams {
            height: 2f64.powi(-(2 * n as i32 + 3)),
            exceptional_fraction: 2f64.powi(-(2 * n as i32 + 4)),
            alpha_start: 1.0,
            max_depth: 12,
        }
    }
}

/// Selected cubes by generation: `generations[k]` are the `Q_j^k`.
#[derive(Debug, Clone, Serialize)]
pub struct SparseFamily {
    pub root: usize,
    pub generations: Vec<Vec<usize>>,
    /// Parent selection of each selected cube (`None` for the root).
    pub selected_parent: Vec<(usize, Option<usize>)>,
    /// `α` used at each selected cube that spawned a search.
    pub alphas: Vec<(usize, f64)>,
    /// Grid mass of exceptional sets not covered by the chosen children.
    pub uncovered_exceptional: usize,
    /// The recursion stopped at `max_depth` with children still pending.
    pub truncated: bool,
}

impl SparseFamily {
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.generations.iter().flatten().copied()
    }

    /// Exact check of the sparse-family invariants on grid counts.
    pub fn verify(&self, cubes: &CubeSystem) -> SparseCheck {
        let np = cubes.grid.len();
        let mut disjoint = true;
        let mut nested = true;
        let mut half = true;
        let mut omega_prev: Option<Vec<bool>> = None;
        for gen in &self.generations {
            let mut omega = vec![false; np];
            for &q in gen {
                for &p in &cubes.cubes[q].members {
                    if omega[p] {
                        disjoint = false;
                    }
                    omega[p] = true;
                }
            }
            if let Some(prev) = &omega_prev {
                if omega.iter().zip(prev).any(|(&a, &b)| a && !b) {
                    nested = false;
                }
            }
            omega_prev = Some(omega);
        }
        // |Ω_{k+1} ∩ Q| ≤ ½|Q| for every selected Q
        for &(q, _) in &self.selected_parent {
            let inside: usize = self
                .selected_parent
                .iter()
                .filter(|(_, p)| *p == Some(q))
                .map(|(c, _)| cubes.cubes[*c].members.len())
                .sum();
            if 2 * inside > cubes.cubes[q].members.len() {
                half = false;
            }
        }
        let first = self.generations.get(1).map(|g| g.iter().map(|&c| cubes.cubes[c].members.len()).sum::<usize>()).unwrap_or(0);
        SparseCheck {
            disjoint,
            nested,
            half_measure: half,
            first_generation_fraction: first as f64 / cubes.cubes[self.root].members.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseCheck {
    pub disjoint: bool,
    pub nested: bool,
    pub half_measure: bool,
    /// `Σ_j |Q_j^1| / |Q_0|`.
    pub first_generation_fraction: f64,
}

impl SparseCheck {
    pub fn holds(&self) -> bool {
        self.disjoint && self.nested && self.half_measure && self.first_generation_fraction <= 0.5
    }
}

/// `(avg_{γQ} |f|²)^{1/2}` on the grid.
pub fn dilated_l2_average(cubes: &CubeSystem, cube: usize, gamma: f64, f: &[f64]) -> f64 {
    let pts = cubes.dilated(cube, gamma);
    if pts.is_empty() {
        return 0.0;
    }
    (pts.iter().map(|&p| f[p] * f[p]).sum::<f64>() / pts.len() as f64).sqrt()
}

/// Calderón–Zygmund recursion on `root`: at each selected `Q`, with `A = (avg_{3Q}|f|²)^{1/2}`,
/// `E = {x ∈ Q : |f| > αA or maximal > αA}` and the children are the maximal
/// descendants `D` with `|D ∩ E| > height·|D|`.
pub fn build_sparse_family(
    cubes: &CubeSystem,
    root: usize,
    f: &[f64],
    maximal: &[f64],
    params: &SparseParams,
) -> Result<SparseFamily> {
    let np = cubes.grid.len();
    if f.len() != np || maximal.len() != np {
        return Err(Error::InvalidArgument("f and the maximal function must be sampled on the cube grid".into()));
    }
    if root >= cubes.cubes.len() {
        return Err(Error::InvalidArgument(format!("no cube {root}")));
    }
    let mut fam = SparseFamily {
        root,
        generations: vec![vec![root]],
        selected_parent: vec![(root, None)],
        alphas: Vec::new(),
        uncovered_exceptional: 0,
        truncated: false,
    };
    let mut depth = 0;
    loop {
        let current = fam.generations.last().cloned().unwrap_or_default();
        let mut next = Vec::new();
        for q in current {
            let cube = &cubes.cubes[q];
            let a = dilated_l2_average(cubes, q, 3.0, f);
            if a == 0.0 || cube.children.is_empty() {
                continue;
            }
            // smallest α on the ladder making E small
            let mut alpha = params.alpha_start;
            let exceptional = loop {
                let e: Vec<bool> = cube.members.iter().map(|&p| f[p].abs() > alpha * a || maximal[p] > alpha * a).collect();
                let count = e.iter().filter(|&&b| b).count();
                if count as f64 <= params.exceptional_fraction * cube.members.len() as f64 {
                    break e;
                }
                alpha *= std::f64::consts::SQRT_2;
            };
            fam.alphas.push((q, alpha));
            let mut in_e = vec![false; np];
            for (&p, &b) in cube.members.iter().zip(&exceptional) {
                in_e[p] = b;
            }
            if !exceptional.iter().any(|&b| b) {
                continue;
            }
            // maximal descendants with density above the height, coarsest first
            let mut chosen: Vec<usize> = Vec::new();
            let mut covered = vec![false; np];
            for d in cubes.descendants(q) {
                let dc = &cubes.cubes[d];
                if covered[dc.members[0]] {
                    continue;
                }
                let hits = dc.members.iter().filter(|&&p| in_e[p]).count();
                if hits as f64 > params.height * dc.members.len() as f64 {
                    chosen.push(d);
                    for &p in &dc.members {
                        covered[p] = true;
                    }
                }
            }
            fam.uncovered_exceptional += cube.members.iter().filter(|&&p| in_e[p] && !covered[p]).count();
            let total: usize = chosen.iter().map(|&c| cubes.cubes[c].members.len()).sum();
            if 2 * total > cube.members.len() {
                return Err(Error::InvalidArgument(format!("cube {q}: selected children exceed half its measure")));
            }
            for c in chosen {
                fam.selected_parent.push((c, Some(q)));
                next.push(c);
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        if depth > params.max_depth {
            fam.truncated = true;
            break;
        }
        fam.generations.push(next);
    }
    Ok(fam)
}

/// `A_{r,S} f = Σ_{Q∈S} (avg_Q |f|^r)^{1/r} χ_Q`.
pub fn sparse_operator(fam: &SparseFamily, cubes: &CubeSystem, r: u32, f: &[f64]) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let mut out = vec![0.0; f.len()];
    for q in fam.all() {
        let m = &cubes.cubes[q].members;
        let avg = (m.iter().map(|&p| f[p].abs().powi(r as i32)).sum::<f64>() / m.len() as f64).powf(1.0 / r as f64);
        for &p in m {
            out[p] += avg;
        }
    }
    Ok(out)
}

/// `Σ_{Q∈F} (avg_{3Q}|f|²)^{1/2} χ_Q`, the right side of the sparse bound.
pub fn sparse_bound(fam: &SparseFamily, cubes: &CubeSystem, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for q in fam.all() {
        let avg = dilated_l2_average(cubes, q, 3.0, f);
        for &p in &cubes.cubes[q].members {
            out[p] += avg;
        }
    }
    out
}

/// `Λf = sup_{Q∋x} avg_Q|f|` (order 1) or `Λ₂f = sup_{Q∋x}(avg_Q|f|²)^{1/2}` (order 2),
/// over every cube of the system and the single grid cells.
pub fn maximal_function(f: &[f64], order: u32, cubes: &CubeSystem) -> Result<Vec<f64>> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!("order must be 1 or 2, got {order}")));
    }
    let mut out: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    for q in &cubes.cubes {
        let avg = match order {
            1 => q.members.iter().map(|&p| f[p].abs()).sum::<f64>() / q.members.len() as f64,
            _ => (q.members.iter().map(|&p| f[p] * f[p]).sum::<f64>() / q.members.len() as f64).sqrt(),
        };
        for &p in &q.members {
            out[p] = out[p].max(avg);
        }
    }
    Ok(out)
}
