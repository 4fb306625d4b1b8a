//! Scalar abstraction for the numerical kernels.
//!
//! Everything numerical in this crate is generic over [`Real`], a thin
//! extension of [`num_traits::Float`] that adds the conversions and
//! threading bounds the solvers need.  `f32` and `f64` both qualify via the
//! blanket impl; the crate root exports `f64` aliases for the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating point scalar usable by the simulation and verification kernels.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant converts to Real")
    }

    /// Conversion from a count (sample sizes, node indices).
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to Real")
    }

    /// Widening conversion used by formatting and reporting code.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssignOps + Sum<T> + Debug + Display + Send + Sync + 'static
{
}
