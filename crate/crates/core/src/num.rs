//! Scalar abstraction for the numeric kernels.
//!
//! The solvers in [`crate::linalg`], [`crate::linmod`], [`crate::forest`] and
//! [`crate::balance`] are generic over this trait so they work with `f32` or
//! `f64`. The statistical layer instantiates everything at `f64`; see the
//! aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy cast from `f64`, for constants and tolerances.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }

    /// Cast from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
