//! Laguerre functions, the heat-type approximate identity and kernel estimates.

pub mod gamma;
pub mod kernel;
pub mod laguerre;
pub mod moments;

pub use kernel::{
    approximate_identity, approximate_identity_report, commutativity_defect, heat_slice, heat_slice_closed_form,
    heat_weyl_normalization, psi, psi_eval, telescoping_defect, twisted_convolution, ApproximateIdentityReport,
    HeatKernel, HeatProfile, HeatSlice,
};
pub use gamma::{b_function, gamma_operator, gamma_symbol, spectral_kernel, verify_corollary_4_3, SpectralDerivativeReport};
pub use laguerre::{laguerre_all, laguerre_eval, laguerre_function};
pub use moments::{
    fit_log_slope, gradient_kernel_moment, kernel_moment, lemma_4_4_envelope, psi_band_max, psi_l2_by_plancherel,
    psi_symbol, translation_l1_defect, weighted_l1_moment, EnvelopeLevel, EnvelopeReport, KernelGrid, KernelKind, RadialMultiplier,
    RadialTable, SlopeFit,
};
