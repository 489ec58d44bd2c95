//! Group law, homogeneous norm, grids and left-invariant calculus on `Hⁿ`.

pub mod convolve;
pub mod fields;
pub mod grid;
pub mod point;

pub use convolve::{convolve, convolve_at};
pub use fields::{vector_field_apply, vector_field_at, z_field_apply, VectorField, ZField};
pub use grid::{GridFunction, HFunction, TGrid, Warned, ZGrid, ZSamples};
pub use point::{
    dilate, group_inv, group_mul, homogeneous_norm, quasi_distance, quasi_triangle_ratio, rho, symplectic, Point,
};
