//! Scalar abstraction for the model and evaluation layer.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
///
/// Geometry, channel gains and rate evaluation are written against this trait.
/// The optimizers work in `f64` only: the penalized feasibility systems mix
/// magnitudes from 1e-14 to 1e18 and barrier steps need the full mantissa.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log2(1 + x)` with `x` clamped at zero against underflow.
#[inline]
pub fn log2_1p<T: Real>(x: T) -> T {
    x.max(T::zero()).ln_1p() * T::LOG2_E()
}

/// Squared Euclidean norm of a 2D difference.
#[inline]
pub fn dist2_sq<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
