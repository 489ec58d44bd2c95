//! Scalar abstraction shared by the pointwise special-function and geometry code.
//!
//! Matrix-valued operators always use `f64`/`Complex64`; the pointwise pieces
//! (Hermite and Laguerre recurrences, the group law, homogeneous norm, the `b_r`
//! profiles) are written once over [`Real`] so they can run in `f32` as well.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point type usable by the generic pointwise routines.
pub trait Real:
    Float + FromPrimitive + NumAssign + Copy + Send + Sync + std::fmt::Debug + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(k: usize) -> Self {
        Self::from_usize(k).expect("representable count")
    }
}

impl Real for f32 {}
impl Real for f64 {}
