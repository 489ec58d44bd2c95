//! Dyadic cubes on a bounded box of `Hⁿ`, sparse families, maximal functions,
//! Muckenhoupt characteristics and the truncated-operator experiments.

pub mod cubes;
pub mod experiment;
pub mod grid;
pub mod operator;
pub mod sparse;
pub mod weights;

pub use cubes::{build_cube_system, Cube, CubeReport, CubeSystem, LevelReport, PropertyCheck};
pub use grid::{group_offset, BoxGrid};
pub use operator::{far_part, grand_maximal, quintic_bump, truncated_operator, truncation_scales, GrandMaximal, GroupKernel};
pub use sparse::{
    build_sparse_family, dilated_l2_average, maximal_function, sparse_bound, sparse_operator, SparseCheck, SparseFamily,
    SparseParams,
};
pub use weights::{ap_characteristic, Weight};
pub use experiment::{
    central_root, random_test_functions, sparse_domination_experiment, weak_type_experiment, weighted_norm_experiment,
    LevelSetPoint, SparseDominationReport, SparseDominationRow, TestPacket, WeakTypeReport, WeakTypeRow, WeightedReport,
    WeightedRow,
};
