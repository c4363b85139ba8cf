//! Scalar abstraction for the numerical core.
//!
//! Every model, integrator, and filter in this crate is generic over a
//! floating-point scalar so the same code runs in `f32` or `f64`. The
//! concrete aliases at the crate root pick `f64`, which is what the CLI
//! and the shipped configurations use.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
///
/// `RealField` supplies the transcendental functions and linear-algebra
/// support, the `num-traits` bounds supply literal conversion.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync
{
}

impl<T> Real for T where T: RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync {}

/// Converts an `f64` literal into the working scalar.
///
/// Panics only if the scalar cannot represent ordinary finite literals,
/// which cannot happen for `f32`/`f64`.
#[inline]
pub fn lit<T: Real>(value: f64) -> T {
    T::from_f64(value).expect("literal not representable in scalar type")
}

/// True when the value is neither NaN nor infinite.
#[inline]
pub fn is_finite<T: Real>(value: T) -> bool {
    value.to_f64().is_some_and(f64::is_finite)
}

/// Lossy view of the scalar as `f64`, for error payloads and output.
#[inline]
pub fn as_f64<T: Real>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Seconds in one Julian year (365.25 days).
pub const SECONDS_PER_YEAR: f64 = 31_557_600.0;

/// Earth's gravitational parameter in m^3/s^2.
pub const MU_EARTH_M3_S2: f64 = 3.986_004_418e14;

/// Mean equatorial Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6378.137;
