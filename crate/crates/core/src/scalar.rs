//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Everything is written against [`Real`], which is satisfied by `f32` and
//! `f64`. Tolerances scale with the machine epsilon of the scalar so that the
//! same code paths are meaningful in single precision.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real scalar usable by the dense linear algebra in this crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64` for reporting and file output.
    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    /// Relative tolerance floor: `base` in double precision, widened to a
    /// multiple of the machine epsilon for narrower types.
    #[inline]
    fn rel_tol(base: f64) -> Self {
        let eps = Self::default_epsilon().as_f64();
        Self::lit(base.max(100.0 * eps))
    }

    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Threshold above which an eigenvalue of a matrix with Frobenius norm
/// `norm` is treated as strictly positive.
#[inline]
pub fn positive_threshold<T: Real>(norm: T) -> T {
    T::rel_tol(1e-9) * norm.max(T::one())
}
