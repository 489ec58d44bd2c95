//! Spectral multipliers of nonnegative self-adjoint operators on finite metric measure spaces.

pub mod calculus;
pub mod maximal;
pub mod sobolev;
pub mod space;
pub mod weighted;

pub use calculus::{
    fit_gaussian_bound, heat_kernel, kernel_density, spectral_multiplier, spectral_multiplier_root, GaussianFit, SymbolFunction,
};
pub use maximal::{
    maximal_mfl, random_graph_functions, verify_maximal_bound, Ball, BallSystem, GraphPacket, MaximalReport, MaximalRow,
    SplitParams,
};
pub use sobolev::{multiplier_norm, partition_piece, partition_profile, partition_sum, sobolev_norm, Cutoff, SobolevNorm};
pub use space::{build_space, DiscreteSpace, DoublingReport, MeasureKind, SpaceKind, MAX_POINTS};
pub use weighted::{
    ball_ap_characteristic, weighted_norm, weighted_spectral_experiment, GraphWeight, GraphWeightedReport, GraphWeightedRow,
};
