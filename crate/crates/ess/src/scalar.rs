use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numeric core is generic over.
///
/// Everything the factorization, triangular solves, residual evaluation and
/// the generator need: IEEE float semantics from `num_traits::Float`, lossless
/// conversion through `f64` for text I/O, and `Send + Sync` so frontal tasks
/// can move across worker threads.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Display
    + LowerExp
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute pivot floor below which a candidate counts as numerically zero.
    fn pivot_floor() -> Self;

    /// Lossy narrowing from `f64`; exact for `f64` itself.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }
}

impl Scalar for f64 {
    fn pivot_floor() -> Self {
        1e-14
    }
}

impl Scalar for f32 {
    // Same role as the f64 floor, scaled to single-precision ulps.
    fn pivot_floor() -> Self {
        1e-6
    }
}
