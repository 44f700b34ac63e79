//! Scalar abstraction for the numeric core.
//!
//! All spectral and model math is written against [`Real`] so the same code
//! runs in `f32` or `f64`. The wire format, trace files and CLI pin `f64`
//! (see the crate-root aliases); the generic parameter mostly matters for
//! embedding the codec in memory-constrained collectors.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Display
    + LowerExp
    + Debug
    + FromStr<Err = ParseFloatError>
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` literal; panics only if the literal
    /// is outside the target type's range, which never happens for the
    /// constants used in this crate.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal out of range for scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
