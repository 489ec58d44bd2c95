use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite degree {degree} exceeds the stable recurrence range (max {max})")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature cannot resolve |z| = {radius:.3}; capture radius is {capture:.3}")]
    QuadratureDegenerate { radius: f64, capture: f64 },

    #[error("boundary band carries relative content {content:.3e} above tolerance {tolerance:.1e}")]
    BoundaryBand { content: f64, tolerance: f64 },

    #[error("truncation overflow: {0}")]
    TruncationOverflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("r = {r:.4e} lies outside the admissible range [{min:.4e}, {max:.4e}] for this grid")]
    Resolution { r: f64, min: f64, max: f64 },

    #[error("series tail not certified below {tolerance:.1e} within k_max = {k_max}")]
    TailNotCertified { k_max: usize, tolerance: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("report file not found: {}", .0.display())]
    MissingReport(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
