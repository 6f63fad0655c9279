//! Scalar abstraction for the optimization layer.
//!
//! Model documents store decimals as `f64`; the allocator lifts them into any
//! [`Scalar`] so objective vectors, violation magnitudes and Pareto machinery
//! can run in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the allocator.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance under which two weighted scores count as tied.
    fn tie_tolerance() -> Self;

    /// Lossy conversion from a document decimal.
    fn of(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).unwrap_or_else(Self::nan)
    }

    /// Lossy conversion from an integer quantity.
    fn of_u64(value: u64) -> Self {
        <Self as FromPrimitive>::from_u64(value).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn tie_tolerance() -> Self {
                <$t>::EPSILON.sqrt()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
