//! Numeric abstraction shared by the whole crate.
//!
//! Every delay, capacity, load and price is carried as a [`Scalar`]. The
//! production path uses `f64` (see the aliases at the crate root); `f32` is
//! supported for memory-constrained sweeps at reduced precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or file value into this scalar.
    fn lit(v: f64) -> Self;

    /// Widens to `f64` for reporting and serialization.
    fn as_f64(self) -> f64;

    /// Tolerance under which two objective values are treated as equal
    /// when deciding whether a move strictly improves an incumbent.
    fn improvement_tolerance(reference: Self) -> Self {
        let scale = reference.abs().max(Self::one());
        Self::epsilon() * Self::lit(1024.0) * scale
    }
}

impl Scalar for f32 {
    fn lit(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn lit(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

/// Total order on scalars for sorting; NaN compares equal to everything.
pub(crate) fn cmp<S: Scalar>(a: S, b: S) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
