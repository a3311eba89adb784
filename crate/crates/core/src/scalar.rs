//! Floating-point scalar used by the closed-form and statistics code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable constant")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
