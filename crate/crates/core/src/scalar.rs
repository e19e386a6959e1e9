//! Scalar abstractions shared by every module.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num};

/// Field-like scalar: floats and exact rationals both qualify.
pub trait Scalar:
    Num + Clone + FromPrimitive + PartialOrd + Neg<Output = Self> + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for rationals representable with small denominators.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer not representable")
    }
}

impl<T> Scalar for T where
    T: Num + Clone + FromPrimitive + PartialOrd + Neg<Output = T> + Debug + Send + Sync + 'static
{
}

/// Floating-point scalar with the transcendental functions the solvers need.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Lossy conversion used at output boundaries.
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
