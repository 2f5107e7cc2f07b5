//! Scalar abstraction for the exact mass machinery.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the distribution layer is generic over.
///
/// `f32` and `f64` both implement it; stated tolerances (`1e-9` mass check,
/// `1e-12` CDF accuracy) are meaningful at `f64` and degrade gracefully to
/// the scalar's own epsilon below that.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Lossy cast from `f64`, for coefficient tables and literals.
#[inline]
pub(crate) fn cast<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant must convert to the scalar type")
}
