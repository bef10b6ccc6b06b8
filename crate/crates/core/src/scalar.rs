use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used by the exact linear-algebra layer.
///
/// Arithmetic and elementary functions come from [`RealField`]; conversions
/// to and from `f64` come from num-traits.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static {
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}
