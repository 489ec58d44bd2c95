//! Numerical harmonic analysis on the Heisenberg group.
//!
//! The crate covers the scaled Hermite basis and ladder operators, the group
//! law and grids on `Hⁿ = ℂⁿ × ℝ`, Weyl and group Fourier transforms, the
//! noncommutative derivations `δ_j`, `δ̄_j`, `Θ`, Laguerre heat kernels, Christ
//! cubes with sparse and weighted experiments, and spectral multipliers on finite
//! graphs.

pub mod derivations;
pub mod dyadic;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod heat;
pub mod hermite;
pub mod multiplier;
pub mod report;
pub mod scalar;
pub mod suite;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::Real;

/// A point of `Hⁿ` in double precision.
pub type HPoint = geometry::Point<f64>;
