//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All math is written once against [`Real`] and instantiated for `f32` and
//! `f64`. The nalgebra field traits supply the elementary functions, and
//! `num-traits` supplies lossless-as-possible conversion from the `f64`
//! literals used for constants and tolerances.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn machine_eps() -> Self {
        Self::default_epsilon()
    }
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

/// Pairwise (cascade) summation; the reduction tree only depends on the
/// length of the input, so results are reproducible.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
