use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar the integrators and the polytropic model are written against.
pub trait Real:
    Float + FromPrimitive + NumAssign + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossless-enough conversion of an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
