//! Schrödinger representation, Weyl and group Fourier transforms, and multipliers.

pub mod displacement;
pub mod family;
pub mod lemma;
pub mod packet;
pub mod transform;

pub use displacement::{
    displacement_1d, displacement_entry_closed_form, displacement_parameter, rep_matrix, rep_matrix_quadrature,
    special_hermite,
};
pub use family::{
    apply_fourier_multiplier, group_fourier, nyquist_fraction, plancherel_mass, FnFamily, IdentityFamily,
    LambdaGrid, MultiplierFamily, SmoothFamily,
};
pub use lemma::{ladder_identities, LadderIdentityReport};
pub use packet::{WavePacket, ZPacket};
pub use transform::{
    apply_weyl_multiplier, inverse_weyl, inverse_weyl_with_tolerance, weyl_transform, WeylInverse,
    DEFAULT_BOUNDARY_TOLERANCE,
};
