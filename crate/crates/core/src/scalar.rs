//! Floating-point abstraction shared by the geometry, feature, classifier and
//! metric code. Pixel storage stays 8-bit; everything derived from pixels is
//! computed in a `Scalar`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar usable throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_byte(v: u8) -> Self {
        Self::lit(f64::from(v))
    }

    #[inline]
    fn from_count(v: usize) -> Self {
        Self::lit(v as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds half-up and saturates into the 8-bit sample range.
#[inline]
pub fn to_u8<T: Scalar>(v: T) -> u8 {
    let r = (v + T::lit(0.5)).floor();
    if r <= T::zero() {
        0
    } else if r >= T::lit(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(0)
    }
}
