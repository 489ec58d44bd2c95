//! Check tables, plot series and their JSON/CSV serialisation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One verified quantity: `pass` when `value` meets `tolerance` in the stated direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Which statement of the theory the check exercises, as a short descriptive anchor.
    pub paper_ref: String,
    /// `None` when the measured value was not finite.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, paper_ref: &str, value: f64, tolerance: f64) -> Self {
        Self::with(name, paper_ref, value, tolerance, value <= tolerance)
    }

    /// Passes when `value ≥ tolerance`; used for readings that must be rejected.
    pub fn at_least(name: &str, paper_ref: &str, value: f64, tolerance: f64) -> Self {
        Self::with(name, paper_ref, value, tolerance, value >= tolerance)
    }

    /// Passes when `lo ≤ value ≤ hi`; `tolerance` records the half-width of the window.
    pub fn within(name: &str, paper_ref: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::with(name, paper_ref, value, (hi - lo) / 2.0, (lo..=hi).contains(&value))
    }

    pub fn with(name: &str, paper_ref: &str, value: f64, tolerance: f64, pass: bool) -> Self {
        let finite = value.is_finite();
        Check {
            name: name.into(),
            paper_ref: paper_ref.into(),
            value: finite.then_some(value),
            tolerance,
            pass: pass && finite,
        }
    }
}

/// A named `(x, y, series)` table with axis labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64, String)>,
}

impl Plot {
    pub fn new(name: &str, x_label: &str, y_label: &str) -> Self {
        Plot { name: name.into(), x_label: x_label.into(), y_label: y_label.into(), points: Vec::new() }
    }

    pub fn push(&mut self, x: f64, y: f64, series: &str) {
        self.points.push((x, y, series.into()));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: Option<u64>,
    /// The resolved configuration, one entry per key.
    pub config: BTreeMap<String, String>,
    /// Seeded test functions and other inputs, as drawn.
    pub inputs: serde_json::Value,
    pub checks: Vec<Check>,
    pub plots: Vec<Plot>,
    /// Extra `(file name, contents)` pairs written next to the report, such as serialised spaces.
    #[serde(skip)]
    pub attachments: Vec<(String, String)>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn json_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", self.suite))
    }

    /// Writes `<suite>.json` and the plot files into `dir`; returns every path written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let path = self.json_path(dir);
        fs::write(&path, self.to_json()?)?;
        let mut out = vec![path];
        out.extend(write_plots(self, dir)?);
        for (name, contents) in &self.attachments {
            let p = dir.join(name);
            fs::write(&p, contents)?;
            out.push(p);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingReport(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Serialize)]
struct AxisMeta<'a> {
    suite: &'a str,
    plot: &'a str,
    x: &'a str,
    y: &'a str,
    csv: String,
    series: Vec<&'a str>,
}

fn write_plots(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for plot in &report.plots {
        let stem = format!("{}_{}", report.suite, plot.name);
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
        w.write_record(["x", "y", "series"]).map_err(csv_error)?;
        for (x, y, s) in &plot.points {
            w.write_record([x.to_string(), y.to_string(), s.clone()]).map_err(csv_error)?;
        }
        w.flush()?;
        let mut series: Vec<&str> = Vec::new();
        for p in &plot.points {
            if !series.contains(&p.2.as_str()) {
                series.push(&p.2);
            }
        }
        let meta = AxisMeta {
            suite: &report.suite,
            plot: &plot.name,
            x: &plot.x_label,
            y: &plot.y_label,
            csv: format!("{stem}.csv"),
            series,
        };
        let meta_path = dir.join(format!("{stem}.axes.json"));
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
        out.push(csv_path);
        out.push(meta_path);
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads a report file and writes one `(x, y, series)` CSV plus axis metadata per plot.
pub fn emit_plot_data(report_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let report = Report::read(report_path)?;
    fs::create_dir_all(out_dir)?;
    write_plots(&report, out_dir)
}
