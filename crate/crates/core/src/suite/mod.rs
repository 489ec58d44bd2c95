//! Experiment configuration and the seeded suites behind the command-line runner.
//!
//! A configuration is a flat set of `key = value` entries (from a file, from flags or both);
//! every suite turns one configuration into a [`Report`](crate::report::Report).

mod decay;
mod dyadic;
mod graph;
mod identities;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::graph::SpaceKind;
use crate::report::Report;

pub use identities::IDENTITY_SUITES;

/// The runner's subcommands that produce reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Identities,
    KernelDecay,
    SparseExp,
    WeightedExp,
    GraphExp,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::KernelDecay => "kernel-decay",
            Command::SparseExp => "sparse-exp",
            Command::WeightedExp => "weighted-exp",
            Command::GraphExp => "graph-exp",
        }
    }

    fn randomized(self, suite: &str) -> bool {
        match self {
            Command::KernelDecay => false,
            Command::Identities => identities::randomized(suite),
            _ => true,
        }
    }
}

pub const KEYS: [&str; 15] = [
    "suite", "n", "k", "lambda-grid", "grid", "r-sweep", "n-range", "weights", "seed", "out", "l", "field", "p", "spaces",
    "functions",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: String,
    pub n: usize,
    /// Hermite truncation `K`.
    pub truncation: usize,
    /// `(min, max, ratio)` of the logarithmic λ-grid.
    pub lambda_grid: (f64, f64, f64),
    /// Suite-specific grid numbers: `radius,points` for z-grids, `half_width,z_points,t_points` for boxes.
    pub grid: Option<Vec<f64>>,
    pub r_sweep: Vec<f64>,
    /// Truncation levels `N` of `T^N`.
    pub levels: Vec<u32>,
    /// Exponents `ε` of the weight family.
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Moment orders `l`.
    pub orders: Vec<usize>,
    pub field: Option<VectorField>,
    pub p: f64,
    pub spaces: Vec<(SpaceKind, usize)>,
    /// Number of seeded test functions.
    pub functions: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: String::new(),
            n: 1,
            truncation: 16,
            lambda_grid: (0.125, 8.0, 1.1),
            grid: None,
            r_sweep: dyadic_sweep(-6, -2),
            levels: vec![2, 4, 6],
            weights: vec![0.0, 0.1, 0.2, 0.3],
            seed: None,
            out_dir: PathBuf::from("hh-out"),
            orders: vec![0, 1, 2],
            field: None,
            p: 4.0,
            spaces: vec![(SpaceKind::Path, 128), (SpaceKind::Grid2d, 256)],
            functions: 5,
        }
    }
}

fn dyadic_sweep(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| usage(format!("{key}: cannot parse '{}'", s.trim())))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    let items: Vec<T> = s.split(',').filter(|x| !x.trim().is_empty()).map(|x| parse_num(key, x)).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(usage(format!("{key}: empty list")));
    }
    Ok(items)
}

/// `2^-6`, `2^3` or a plain decimal.
fn parse_scale(key: &str, s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('^') {
        Some((base, exp)) => parse_num::<f64>(key, base)?.powi(parse_num(key, exp)?),
        None => parse_num(key, s)?,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(usage(format!("{key}: '{s}' must be positive")));
    }
    Ok(v)
}

/// `a:b` → `a, 2a, 4a, …` up to `b`.
fn parse_sweep(key: &str, s: &str) -> Result<Vec<f64>> {
    let (a, b) = s.split_once(':').ok_or_else(|| usage(format!("{key}: expected a:b, got '{s}'")))?;
    let (a, b) = (parse_scale(key, a)?, parse_scale(key, b)?);
    if b < a {
        return Err(usage(format!("{key}: {a} > {b}")));
    }
    let mut out = vec![a];
    while out[out.len() - 1] * 2.0 <= b * (1.0 + 1e-12) {
        out.push(out[out.len() - 1] * 2.0);
    }
    Ok(out)
}

fn parse_field(s: &str) -> Result<Option<VectorField>> {
    let s = s.trim();
    let index = |rest: &str| -> Result<usize> {
        let i: usize = parse_num("field", rest)?;
        if i == 0 {
            return Err(usage("field: coordinates are numbered from 1"));
        }
        Ok(i - 1)
    };
    Ok(match s {
        "none" => None,
        "T" => Some(VectorField::T),
        _ if s.starts_with('X') => Some(VectorField::X(index(&s[1..])?)),
        _ if s.starts_with('Y') => Some(VectorField::Y(index(&s[1..])?)),
        _ => return Err(usage(format!("field: expected none, T, X<i> or Y<i>, got '{s}'"))),
    })
}

fn field_name(f: Option<VectorField>) -> String {
    match f {
        None => "none".into(),
        Some(VectorField::T) => "T".into(),
        Some(VectorField::X(i)) => format!("X{}", i + 1),
        Some(VectorField::Y(i)) => format!("Y{}", i + 1),
    }
}

fn space_name(k: SpaceKind) -> &'static str {
    match k {
        SpaceKind::Path => "path",
        SpaceKind::Grid2d => "grid2d",
        SpaceKind::BinaryTree => "tree",
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one entry; `_` and `-` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "suite" => self.suite = value.to_string(),
            "n" => self.n = parse_num(&key, value)?,
            "k" => self.truncation = parse_num(&key, value)?,
            "lambda-grid" => {
                let v: Vec<f64> = parse_list(&key, value)?;
                if v.len() != 3 {
                    return Err(usage("lambda-grid: expected min,max,ratio"));
                }
                self.lambda_grid = (v[0], v[1], v[2]);
            }
            "grid" => self.grid = Some(parse_list(&key, value)?),
            "r-sweep" => self.r_sweep = parse_sweep(&key, value)?,
            "n-range" => self.levels = parse_list(&key, value)?,
            "weights" => self.weights = parse_list(&key, value)?,
            "seed" => self.seed = Some(parse_num(&key, value)?),
            "out" => self.out_dir = PathBuf::from(value),
            "l" => self.orders = parse_list(&key, value)?,
            "field" => self.field = parse_field(value)?,
            "p" => self.p = parse_num(&key, value)?,
            "spaces" => {
                self.spaces = value
                    .split(',')
                    .map(|item| {
                        let (kind, size) =
                            item.split_once(':').ok_or_else(|| usage(format!("spaces: expected kind:size, got '{item}'")))?;
                        let kind = kind.trim().parse::<SpaceKind>().map_err(|e| usage(format!("spaces: {e}")))?;
                        Ok((kind, parse_num(&key, size)?))
                    })
                    .collect::<Result<_>>()?
            }
            "functions" => self.functions = parse_num(&key, value)?,
            _ => return Err(usage(format!("unknown key '{key}' (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment, `[section]` lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Checks ranges and the seed requirement for `command`.
    pub fn validate(&self, command: Command) -> Result<()> {
        if command == Command::Identities {
            if self.suite.trim().is_empty() {
                return Err(usage(format!("suite: empty suite name (one of {})", IDENTITY_SUITES.join(", "))));
            }
            if !IDENTITY_SUITES.contains(&self.suite.as_str()) {
                return Err(usage(format!("suite: unknown suite '{}' (one of {})", self.suite, IDENTITY_SUITES.join(", "))));
            }
        }
        if command.randomized(&self.suite) && self.seed.is_none() {
            return Err(usage(format!("seed: {} draws random test functions and needs --seed", command.name())));
        }
        if !(1..=3).contains(&self.n) {
            return Err(usage(format!("n: {} outside 1..=3", self.n)));
        }
        if !(1..=64).contains(&self.truncation) {
            return Err(usage(format!("k: {} outside 1..=64", self.truncation)));
        }
        let (lo, hi, ratio) = self.lambda_grid;
        if !(lo > 0.0 && hi > lo && ratio > 1.0) {
            return Err(usage(format!("lambda-grid: need 0 < min < max and ratio > 1, got {lo},{hi},{ratio}")));
        }
        if self.r_sweep.len() < 5 {
            return Err(usage(format!("r-sweep: the slope fit needs at least 5 dyadic points, got {}", self.r_sweep.len())));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| l == 0 || l > 10) {
            return Err(usage(format!("n-range: levels must lie in 1..=10, got {:?}", self.levels)));
        }
        if self.weights.iter().any(|&e| !(0.0..1.0).contains(&e)) {
            return Err(usage(format!("weights: exponents must lie in [0, 1), got {:?}", self.weights)));
        }
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(usage(format!("p: the weighted experiments need p > 2, got {}", self.p)));
        }
        if self.orders.iter().any(|&l| l > 4) {
            return Err(usage(format!("l: moment orders above 4 are not resolved, got {:?}", self.orders)));
        }
        if !(2..=64).contains(&self.functions) {
            return Err(usage(format!("functions: {} outside 2..=64", self.functions)));
        }
        if self.spaces.is_empty() || self.spaces.iter().any(|&(_, s)| !(4..=1024).contains(&s)) {
            return Err(usage("spaces: sizes must lie in 4..=1024"));
        }
        if let Some(VectorField::X(i) | VectorField::Y(i)) = self.field {
            if i >= self.n {
                return Err(usage(format!("field: coordinate {} exceeds n = {}", i + 1, self.n)));
            }
        }
        Ok(())
    }

    /// The resolved configuration as printed into reports.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let (lo, hi, ratio) = self.lambda_grid;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("suite", self.suite.clone());
        put("n", self.n.to_string());
        put("k", self.truncation.to_string());
        put("lambda-grid", format!("{lo},{hi},{ratio}"));
        put("grid", self.grid.as_deref().map(join).unwrap_or_else(|| "default".into()));
        put("r-sweep", join(&self.r_sweep));
        put("n-range", join(&self.levels));
        put("weights", join(&self.weights));
        put("seed", self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into()));
        put("l", join(&self.orders));
        put("field", field_name(self.field));
        put("p", self.p.to_string());
        put("spaces", self.spaces.iter().map(|&(k, s)| format!("{}:{s}", space_name(k))).collect::<Vec<_>>().join(","));
        put("functions", self.functions.to_string());
        m
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0))
    }

    fn grid_or(&self, default: &[f64]) -> Result<Vec<f64>> {
        match &self.grid {
            None => Ok(default.to_vec()),
            Some(g) if g.len() == default.len() => Ok(g.clone()),
            Some(g) => Err(usage(format!("grid: expected {} numbers for this suite, got {}", default.len(), g.len()))),
        }
    }

    fn report(&self, suite: &str) -> Report {
        Report {
            suite: suite.into(),
            seed: self.seed,
            config: self.entries(),
            inputs: serde_json::Value::Null,
            checks: Vec::new(),
            plots: Vec::new(),
            attachments: Vec::new(),
        }
    }
}

/// Validates `config` and runs every suite of `command`.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Vec<Report>> {
    config.validate(command)?;
    match command {
        Command::Identities => identities::run(config),
        Command::KernelDecay => Ok(vec![decay::run(config)?]),
        Command::SparseExp => Ok(vec![dyadic::run_sparse(config)?]),
        Command::WeightedExp => Ok(vec![dyadic::run_weighted(config)?]),
        Command::GraphExp => Ok(vec![graph::run(config)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# demo\n[run]\nsuite = gamma\nr_sweep = 2^-6:2^-1\nn-range = 2,4\nfield = X1\nspaces = path:64,tree:31\n").unwrap();
        assert_eq!(c.suite, "gamma");
        assert_eq!(c.r_sweep.len(), 6);
        assert!((c.r_sweep[0] - 1.0 / 64.0).abs() < 1e-15 && (c.r_sweep[5] - 0.5).abs() < 1e-15);
        assert_eq!(c.levels, vec![2, 4]);
        assert_eq!(c.field, Some(VectorField::X(0)));
        assert_eq!(c.spaces, vec![(SpaceKind::Path, 64), (SpaceKind::BinaryTree, 31)]);
        c.set("suite", "plancherel").unwrap();
        assert_eq!(c.suite, "plancherel");
        assert!(c.validate(Command::Identities).is_err());
        c.set("seed", "4").unwrap();
        c.validate(Command::Identities).unwrap();
        assert_eq!(c.entries()["r-sweep"], "0.015625,0.03125,0.0625,0.125,0.25,0.5");
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = ExperimentConfig::default();
        for (k, v) in [("r-sweep", "1:0.5"), ("n", "x"), ("lambda-grid", "1,2"), ("field", "Z"), ("bogus", "1"), ("spaces", "ring:4")] {
            assert!(matches!(c.set(k, v), Err(Error::Usage(_))), "{k} = {v}");
        }
        assert!(c.apply_text("no equals sign").is_err());
        let err = c.validate(Command::Identities).unwrap_err();
        assert!(err.to_string().contains("empty suite"));
        c.set("r-sweep", "2^-3:2^-1").unwrap();
        assert!(c.validate(Command::KernelDecay).unwrap_err().to_string().contains("r-sweep"));
        c.set("r-sweep", "0.015625:0.25").unwrap();
        c.validate(Command::KernelDecay).unwrap();
        assert!(c.validate(Command::SparseExp).unwrap_err().to_string().contains("seed"));
    }
}
