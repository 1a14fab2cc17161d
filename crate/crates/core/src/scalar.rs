//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the statistical kernels are written against: `f32` or `f64`.
///
/// Accuracy targets quoted in the docs (for example `1e-12` on the normal
/// distribution function) refer to `f64`; `f32` instantiations are accurate
/// to single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal or intermediate into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 value representable in target float")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("float convertible to f64")
}

/// `ceil` that ignores floating-point residue just above an integer,
/// e.g. `2.2 * 85.0 = 187.00000000000003` rounds up to 187, not 188.
pub(crate) fn ceil_tol<T: Real>(x: T) -> T {
    let slack = lit::<T>(1e-9) * x.abs().max(T::one());
    let r = x.round();
    if (x - r).abs() <= slack {
        r
    } else {
        x.ceil()
    }
}
