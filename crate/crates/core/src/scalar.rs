use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the geometry pipeline is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Infallible for the supported float types.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees<T: Real>(deg: T) -> T {
    let full = T::lit(360.0);
    let mut wrapped = deg % full;
    if wrapped < T::zero() {
        wrapped = wrapped + full;
    }
    // -0.0 % 360 and tiny negatives that round up to 360
    if wrapped >= full {
        wrapped = wrapped - full;
    }
    if wrapped == T::zero() {
        T::zero()
    } else {
        wrapped
    }
}

/// Signed shortest angular difference `to - from`, in `(-180, 180]` degrees.
pub fn angle_diff_degrees<T: Real>(from: T, to: T) -> T {
    let d = normalize_degrees(to - from);
    if d > T::lit(180.0) {
        d - T::lit(360.0)
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_into_range() {
        assert_eq!(normalize_degrees(-90.0_f64), 270.0);
        assert_eq!(normalize_degrees(720.0_f64), 0.0);
        assert_eq!(normalize_degrees(359.5_f32), 359.5);
        assert_eq!(normalize_degrees(-0.0_f64).to_bits(), 0.0_f64.to_bits());
    }

    #[test]
    fn signed_difference() {
        assert_eq!(angle_diff_degrees(350.0_f64, 10.0), 20.0);
        assert_eq!(angle_diff_degrees(10.0_f64, 350.0), -20.0);
        assert_eq!(angle_diff_degrees(0.0_f64, 180.0), 180.0);
    }
}
