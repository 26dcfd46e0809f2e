//! Scalar abstraction: the whole numerical core is generic over the real
//! floating-point type (`f32` or `f64`).

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float as NumFloat, FloatConst, FromPrimitive, NumAssignOps};

/// Real scalar type the simulation is generic over.
pub trait Float:
    NumFloat + FloatConst + FromPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert to scalar type")
    }

    /// 2π, the conversion factor between ordinary frequency and rad/s.
    fn tau() -> Self {
        Self::PI() + Self::PI()
    }
}

impl Float for f32 {}
impl Float for f64 {}

/// Complex number over the generic scalar.
pub type C<T> = Complex<T>;

pub fn c_zero<T: Float>() -> C<T> {
    C::new(T::zero(), T::zero())
}

pub fn c_one<T: Float>() -> C<T> {
    C::new(T::one(), T::zero())
}

pub fn c_re<T: Float>(x: T) -> C<T> {
    C::new(x, T::zero())
}

pub fn c_im<T: Float>(x: T) -> C<T> {
    C::new(T::zero(), x)
}
