use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, NumAssign};

/// Real scalar the library is generic over. Working precision is `f32`;
/// oracle and analysis paths instantiate the same code at `f64`.
pub trait Scalar: Float + NumAssign + Sum + Debug + Display + Copy + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}
