//! Scalar abstraction shared by the array math and the neural regressor.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Short name used in model files.
    const NAME: &'static str;

    /// Converts an `f64` constant. Never fails for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";
}

impl Real for f64 {
    const NAME: &'static str = "f64";
}

/// Wraps an angle in degrees into `(-180, 180]`.
#[inline]
pub fn wrap_deg<T: Real>(x: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut r = x - full * (x / full).floor();
    // floor can land exactly on `full` for tiny negative inputs
    if r >= full {
        r -= full;
    }
    if r > half {
        r - full
    } else {
        r
    }
}

/// Wraps an azimuth into `[0, 360)`.
#[inline]
pub fn wrap_az<T: Real>(x: T) -> T {
    let full = T::lit(360.0);
    let r = x - full * (x / full).floor();
    if r >= full {
        r - full
    } else {
        r
    }
}
