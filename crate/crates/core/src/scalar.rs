//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use faer::traits::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the geometry, FEM, imaging and optimizer code is generic over.
///
/// Implemented for `f32` and `f64`. The sparse factorization backend needs
/// [`RealField`], everything else only uses the `num-traits` surface.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + RealField + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal; infallible for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// 2D point or vector in millimetres.
pub type Vec2<T> = [T; 2];
