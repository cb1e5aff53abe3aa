//! Floating-point scalar abstraction shared by the numerical kernel.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar type the kernel is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tolerance for algebraic invariants (norms, hermiticity, unitarity).
    const TOLERANCE: Self;
    /// Branches with probability below this floor are discarded.
    const PROBABILITY_FLOOR: Self;

    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const TOLERANCE: Self = 1e-9;
    const PROBABILITY_FLOOR: Self = 1e-12;
}

impl Scalar for f32 {
    const TOLERANCE: Self = 1e-4;
    const PROBABILITY_FLOOR: Self = 1e-7;
}

/// Binary entropy `-p log2 p - (1-p) log2 (1-p)` with `0 log 0 = 0`.
pub fn binary_entropy<T: Scalar>(p: T) -> T {
    let p = p.max(T::zero()).min(T::one());
    xlog2x(p) + xlog2x(T::one() - p)
}

/// `-x log2 x`, zero at `x <= 0`.
#[inline]
pub(crate) fn xlog2x<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        -x * x.log2()
    }
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let tau = T::TAU();
    let mut a = angle % tau;
    if a < T::zero() {
        a = a + tau;
    }
    if a >= tau {
        a = a - tau;
    }
    a
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angle_distance<T: Scalar>(a: T, b: T) -> T {
    let d = wrap_angle(a - b);
    d.min(T::TAU() - d)
}
