//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point type the toolkit computes in: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal or measurement.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 value representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex sample type over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// `exp(j·2π·phase_cycles)`.
pub fn unit_phasor<T: Real>(phase_cycles: T) -> Complex<T> {
    let angle = T::TAU() * phase_cycles;
    Complex::new(angle.cos(), angle.sin())
}
