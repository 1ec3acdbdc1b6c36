//! Scalar abstraction shared by the array, transform and projection layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Real floating-point scalar usable throughout the transform layer.
///
/// Implemented for `f32` and `f64`. Everything in this crate is exercised at
/// `f64`; the `f32` instantiation exists for memory-bound previews.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
