//! Scaled Hermite basis and the operators that live on it.

pub mod basis;
pub mod functions;
pub mod ladder;
pub mod operator;

pub use basis::{binomial, TruncatedBasis};
pub use functions::{
    gauss_hermite, hermite_eval, hermite_function, hermite_function_derivatives, hermite_functions,
    scaled_hermite_functions, MAX_STABLE_DEGREE,
};
pub use ladder::{
    dyadic_projection, hermite_operator, in_dyadic_band, ladder_matrix, spectral_projection,
    spectral_projections, xi_grad_matrix, Ladder,
};
pub use operator::{CMatrix, OperatorMatrix};
