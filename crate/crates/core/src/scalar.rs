//! Scalar abstraction shared by every model.
//!
//! The math is written once against [`Real`] and instantiated for `f64`
//! (the reference precision used by the acceptance checks) and `f32`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar usable by the simulation code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Allowed deviation of `|v|²` from 1 for a unit vector.
    const UNIT_TOLERANCE: Self;
    /// Slack added to analytic bounds (CHSH ≤ 2 and friends) on exact paths.
    const BOUND_SLACK: Self;
    /// Tolerance for normalization of weight tables and densities.
    const WEIGHT_TOLERANCE: Self;

    /// Convert an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossless-enough widening to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const UNIT_TOLERANCE: Self = 1e-12;
    const BOUND_SLACK: Self = 1e-9;
    const WEIGHT_TOLERANCE: Self = 1e-12;
}

impl Real for f32 {
    const UNIT_TOLERANCE: Self = 1e-5;
    const BOUND_SLACK: Self = 1e-5;
    const WEIGHT_TOLERANCE: Self = 1e-5;
}
