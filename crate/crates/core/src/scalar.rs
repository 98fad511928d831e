//! Scalar abstraction for the phase and noise math.
//!
//! The geometry, noise densities and Bayesian posteriors are written against
//! [`Scalar`] so they can be evaluated in `f32` or `f64`. The protocol engine,
//! wire format and Monte Carlo estimators are fixed to `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable for phase arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance used for phase comparisons.
    fn phase_tolerance() -> Self;

    /// Converts an `f64` constant; panics only for values outside the type's range.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {
    fn phase_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn phase_tolerance() -> Self {
        1e-9
    }
}
