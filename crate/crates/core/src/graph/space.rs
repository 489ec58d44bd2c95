use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Path,
    /// Square grid with side `⌊√size⌋`.
    Grid2d,
    /// Complete binary tree (heap numbering) with unit edge lengths.
    BinaryTree,
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(SpaceKind::Path),
            "grid2d" => Ok(SpaceKind::Grid2d),
            "tree" | "binary-tree" => Ok(SpaceKind::BinaryTree),
            _ => Err(Error::InvalidArgument(format!("unknown space kind '{s}' (path, grid2d, tree)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    Counting,
    Degree,
}

/// Ball-growth summary of a space.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    /// Slope of `log μ(B(x,r))` against `log(r + h/2)` (`h` the shortest edge), pooled over
    /// centres with one intercept per centre.
    pub dimension: f64,
    /// Smallest `c` with `μ(B(x,r)) ≤ c (r/s)^d μ(B(x,s))` over the sampled radii `r ≥ s`.
    pub doubling_constant: f64,
    /// Smallest `D` with `μ(B(y,r)) ≤ (1 + d(x,y)/r)^D μ(B(x,r))` over the sampled radii.
    pub comparison_exponent: f64,
    pub radii: Vec<f64>,
    /// Mean `μ(B(x,r))` over centres, per radius.
    pub mean_ball: Vec<f64>,
}

/// Finite metric measure space with a self-adjoint nonnegative operator `L = M⁻¹(D − W)`.
///
/// `L` is symmetric for the `μ`-inner product; the spectral data are those of
/// `M^{−1/2}(D − W)M^{−1/2}`.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    pub label: String,
    pub edges: Vec<(usize, usize, f64)>,
    pub distance: DMatrix<f64>,
    pub measure: Vec<f64>,
    pub laplacian: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors of the symmetrised operator, by column.
    pub eigenvectors: DMatrix<f64>,
    pub doubling: DoublingReport,
    /// Per centre, distances in increasing order with cumulative measure.
    sorted_balls: Vec<Vec<(f64, f64)>>,
}

pub fn build_space(kind: SpaceKind, size: usize, measure: MeasureKind) -> Result<DiscreteSpace> {
    if size < 2 || size > MAX_POINTS {
        return Err(Error::InvalidArgument(format!("size must lie in [2, {MAX_POINTS}], got {size}")));
    }
    let (label, n, edges) = match kind {
        SpaceKind::Path => ("path".to_string(), size, (1..size).map(|i| (i - 1, i, 1.0)).collect::<Vec<_>>()),
        SpaceKind::Grid2d => {
            let side = (size as f64).sqrt().floor() as usize;
            if side < 2 {
                return Err(Error::InvalidArgument("grid2d needs at least 4 points".into()));
            }
            let mut e = Vec::new();
            for i in 0..side {
                for j in 0..side {
                    let p = i * side + j;
                    if j + 1 < side {
                        e.push((p, p + 1, 1.0));
                    }
                    if i + 1 < side {
                        e.push((p, p + side, 1.0));
                    }
                }
            }
            (format!("grid2d({side}x{side})"), side * side, e)
        }
        SpaceKind::BinaryTree => ("binary-tree".to_string(), size, (1..size).map(|i| ((i - 1) / 2, i, 1.0)).collect()),
    };
    let mu = match measure {
        MeasureKind::Counting => vec![1.0; n],
        MeasureKind::Degree => {
            let mut d = vec![0.0; n];
            for &(a, b, w) in &edges {
                d[a] += w;
                d[b] += w;
            }
            d
        }
    };
    DiscreteSpace::from_edges(format!("{label}/{measure:?}").to_lowercase(), n, edges, mu)
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, src)]);
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    dist
}

impl DiscreteSpace {
    /// Space from a weighted edge list (weights are lengths and conductances alike) and a measure.
    pub fn from_edges(label: String, n: usize, edges: Vec<(usize, usize, f64)>, measure: Vec<f64>) -> Result<Self> {
        if n < 2 || n > MAX_POINTS {
            return Err(Error::InvalidArgument(format!("need 2 to {MAX_POINTS} points, got {n}")));
        }
        if measure.len() != n || measure.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument("measure must have one positive entry per point".into()));
        }
        let mut adj = vec![Vec::new(); n];
        let mut w = DMatrix::zeros(n, n);
        for &(a, b, len) in &edges {
            if a >= n || b >= n || a == b || !(len > 0.0) {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b}, {len})")));
            }
            adj[a].push((b, len));
            adj[b].push((a, len));
            w[(a, b)] += 1.0 / len;
            w[(b, a)] += 1.0 / len;
        }
        let rows: Vec<Vec<f64>> = (0..n).map(|s| dijkstra(&adj, s)).collect();
        if rows[0].iter().any(|d| d.is_infinite()) {
            return Err(Error::InvalidArgument("graph is not connected".into()));
        }
        let distance = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
        let mut lap = -w.clone();
        for i in 0..n {
            lap[(i, i)] += deg[i];
        }
        let sym = DMatrix::from_fn(n, n, |i, j| lap[(i, j)] / (measure[i] * measure[j]).sqrt());
        let laplacian = DMatrix::from_fn(n, n, |i, j| lap[(i, j)] / measure[i]);
        let eig = SymmetricEigen::new(sym);
        let eigenvalues = eig.eigenvalues.map(|v| v.max(0.0));
        let sorted_balls = rows
            .iter()
            .map(|r| {
                let mut v: Vec<(f64, f64)> = r.iter().copied().zip(measure.iter().copied()).collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for e in v.iter_mut() {
                    acc += e.1;
                    e.1 = acc;
                }
                v
            })
            .collect();
        let mut space = DiscreteSpace {
            label,
            edges,
            distance,
            measure,
            laplacian,
            eigenvalues,
            eigenvectors: eig.eigenvectors,
            doubling: DoublingReport {
                dimension: 0.0,
                doubling_constant: 0.0,
                comparison_exponent: 0.0,
                radii: vec![],
                mean_ball: vec![],
            },
            sorted_balls,
        };
        space.doubling = space.fit_doubling();
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.distance.max()
    }

    /// `μ(B(x, r))` for the closed ball `{y : d(x,y) ≤ r}`.
    pub fn ball_measure(&self, x: usize, r: f64) -> f64 {
        let v = &self.sorted_balls[x];
        let k = v.partition_point(|e| e.0 <= r + 1e-12);
        if k == 0 {
            0.0
        } else {
            v[k - 1].1
        }
    }

    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.distance[(x, y)] <= r + 1e-12).collect()
    }

    /// Largest eigenvalue of `L`.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.max()
    }

    fn fit_doubling(&self) -> DoublingReport {
        let n = self.len();
        let diam = self.diameter();
        let mut radii = Vec::new();
        let mut r = 2.0;
        while r <= diam / 4.0 {
            radii.push(r);
            r *= 2.0;
        }
        if radii.len() < 2 {
            radii = vec![1.0, 2.0_f64.min(diam.max(1.0))];
        }
        let logs: Vec<Vec<f64>> = (0..n).map(|x| radii.iter().map(|&r| self.ball_measure(x, r).ln()).collect()).collect();
        // a closed ball of radius r on a graph with edge length h covers cells out to r + h/2
        let h = self.edges.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
        let lr: Vec<f64> = radii.iter().map(|r| (r + 0.5 * h).ln()).collect();
        let mean_lr = lr.iter().sum::<f64>() / lr.len() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for row in &logs {
            let mean_y = row.iter().sum::<f64>() / row.len() as f64;
            for (y, x) in row.iter().zip(&lr) {
                num += (x - mean_lr) * (y - mean_y);
                den += (x - mean_lr) * (x - mean_lr);
            }
        }
        let dimension = num / den;
        let mut doubling_constant = 1.0f64;
        for row in &logs {
            for a in 0..radii.len() {
                for b in 0..a {
                    let c = (row[a] - row[b]).exp() / (radii[a] / radii[b]).powf(dimension);
                    doubling_constant = doubling_constant.max(c);
                }
            }
        }
        let mut comparison_exponent = 0.0f64;
        let stride = (n / 64).max(1);
        for x in (0..n).step_by(stride) {
            for y in 0..n {
                let d = self.distance[(x, y)];
                for (k, &r) in radii.iter().enumerate() {
                    let ratio = logs[y][k] - logs[x][k];
                    if ratio > 0.0 && d > 0.0 {
                        comparison_exponent = comparison_exponent.max(ratio / (1.0 + d / r).ln());
                    }
                }
            }
        }
        let mean_ball = radii.iter().map(|&r| (0..n).map(|x| self.ball_measure(x, r)).sum::<f64>() / n as f64).collect();
        DoublingReport { dimension, doubling_constant, comparison_exponent, radii, mean_ball }
    }

    /// Edge list as CSV `a,b,length`.
    pub fn write_edges_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["a", "b", "length"]).map_err(csv_err)?;
        for &(a, b, l) in &self.edges {
            out.write_record([a.to_string(), b.to_string(), format!("{l:?}")]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Measure as CSV `point,mu`.
    pub fn write_measure_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["point", "mu"]).map_err(csv_err)?;
        for (i, m) in self.measure.iter().enumerate() {
            out.write_record([i.to_string(), format!("{m:?}")]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(label: impl Into<String>, edges: impl Read, measure: impl Read) -> Result<Self> {
        let mut mu = Vec::new();
        for rec in csv::Reader::from_reader(measure).records() {
            let rec = rec.map_err(csv_err)?;
            let i: usize = parse(&rec, 0)?;
            if i != mu.len() {
                return Err(Error::InvalidArgument(format!("measure rows must be in point order; found point {i} at row {}", mu.len())));
            }
            mu.push(parse(&rec, 1)?);
        }
        let mut e = Vec::new();
        for rec in csv::Reader::from_reader(edges).records() {
            let rec = rec.map_err(csv_err)?;
            e.push((parse(&rec, 0)?, parse(&rec, 1)?, parse(&rec, 2)?));
        }
        Self::from_edges(label.into(), mu.len(), e, mu)
    }
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::InvalidArgument(format!("csv: bad field {k} in {rec:?}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}
