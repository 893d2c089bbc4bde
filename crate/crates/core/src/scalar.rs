//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point type the simulation is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in target float")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in target float")
    }

    /// Machine epsilon scaled to a "numerically zero" threshold.
    #[inline]
    fn tiny() -> Self {
        Self::epsilon() * Self::lit(16.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn c<F: Real>(re: F, im: F) -> Complex<F> {
    Complex::new(re, im)
}

/// `e^{i x}` as a complex number.
#[inline]
pub(crate) fn cis<F: Real>(x: F) -> Complex<F> {
    Complex::new(x.cos(), x.sin())
}

#[inline]
pub(crate) fn i_unit<F: Real>() -> Complex<F> {
    Complex::new(F::zero(), F::one())
}
