//! Scalar abstractions: a base float trait for f32/f64 and an arithmetic
//! trait shared by plain floats and dual numbers.
//!
//! Everything numeric in this crate is generic over [`Real`] (the storage
//! and reporting type) while the iterative forward passes are additionally
//! generic over [`Scalar`] so the same code path yields either values or
//! values-plus-tangents.

use num_traits::Float;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Base floating-point type: f32 or f64.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Scalar<Real = Self>
{
    /// Shorthand for lossy conversion from f64 literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic required by the unrolled iterations and the likelihood.
///
/// Implemented by the base floats themselves and by [`crate::dual::Dual`],
/// whose operations additionally carry tangents by the chain rule.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    type Real: Real;

    fn from_real(x: Self::Real) -> Self;

    /// The value part (identity for plain floats).
    fn value(&self) -> Self::Real;

    fn sqrt(self) -> Self;

    /// `max(0, x)`; the tangent at exactly zero is zero.
    fn relu(self) -> Self;

    fn exp(self) -> Self;

    fn ln(self) -> Self;

    fn sigmoid(self) -> Self;

    fn softplus(self) -> Self;

    fn is_finite(&self) -> bool;
}

/// Numerically stable logistic function on a base float.
pub(crate) fn sigmoid_raw<T: Real>(x: T) -> T {
    if x >= T::zero() {
        Float::recip(T::one() + Float::exp(-x))
    } else {
        let e = Float::exp(x);
        e / (T::one() + e)
    }
}

/// Numerically stable `ln(1 + exp(x))` on a base float.
pub(crate) fn softplus_raw<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + Float::ln_1p(Float::exp(-x))
    } else {
        Float::ln_1p(Float::exp(x))
    }
}

macro_rules! impl_scalar_for_float {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;

            #[inline(always)]
            fn from_real(x: $t) -> Self {
                x
            }

            #[inline(always)]
            fn value(&self) -> $t {
                *self
            }

            #[inline(always)]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }

            #[inline(always)]
            fn relu(self) -> Self {
                if self > 0.0 {
                    self
                } else if self.is_nan() {
                    self
                } else {
                    0.0
                }
            }

            #[inline(always)]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }

            #[inline(always)]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }

            #[inline(always)]
            fn sigmoid(self) -> Self {
                sigmoid_raw(self)
            }

            #[inline(always)]
            fn softplus(self) -> Self {
                softplus_raw(self)
            }

            #[inline(always)]
            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }
        }
    };
}

impl_scalar_for_float!(f32);
impl_scalar_for_float!(f64);
