//! Forward-mode dual numbers with a fixed number of tangent slots.
//!
//! A [`Dual`] carries a value and `W` directional derivatives through every
//! arithmetic operation, so running any scalar-generic function on duals
//! yields its gradient alongside the value. No intermediate state is stored,
//! which keeps memory flat regardless of how many operations are chained.

use crate::scalar::{sigmoid_raw, softplus_raw, Real, Scalar};
use num_traits::Float;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value plus `W` tangents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T, const W: usize> {
    pub v: T,
    pub dv: [T; W],
}

/// Tangent width used by the three-parameter model (log θ, log δ, log b).
pub type Dual3<T> = Dual<T, 3>;

/// Single-slot dual, used internally when only one directional derivative
/// is needed.
pub type Dual1<T> = Dual<T, 1>;

impl<T: Real, const W: usize> Dual<T, W> {
    pub fn constant(v: T) -> Self {
        Dual {
            v,
            dv: [T::zero(); W],
        }
    }

    /// A variable seeded with tangent 1 in `slot`.
    pub fn variable(v: T, slot: usize) -> Self {
        let mut dv = [T::zero(); W];
        dv[slot] = T::one();
        Dual { v, dv }
    }

    pub fn with_tangents(v: T, dv: [T; W]) -> Self {
        Dual { v, dv }
    }

    #[inline(always)]
    fn map_tangents(self, v: T, scale: T) -> Self {
        let mut dv = self.dv;
        for d in dv.iter_mut() {
            *d = *d * scale;
        }
        Dual { v, dv }
    }
}

impl<T: Real, const W: usize> Add for Dual<T, W> {
    type Output = Self;

    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        let mut dv = self.dv;
        for (d, r) in dv.iter_mut().zip(rhs.dv.iter()) {
            *d = *d + *r;
        }
        Dual {
            v: self.v + rhs.v,
            dv,
        }
    }
}

impl<T: Real, const W: usize> Sub for Dual<T, W> {
    type Output = Self;

    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        let mut dv = self.dv;
        for (d, r) in dv.iter_mut().zip(rhs.dv.iter()) {
            *d = *d - *r;
        }
        Dual {
            v: self.v - rhs.v,
            dv,
        }
    }
}

impl<T: Real, const W: usize> Mul for Dual<T, W> {
    type Output = Self;

    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        let mut dv = self.dv;
        for (d, r) in dv.iter_mut().zip(rhs.dv.iter()) {
            *d = *d * rhs.v + self.v * *r;
        }
        Dual {
            v: self.v * rhs.v,
            dv,
        }
    }
}

impl<T: Real, const W: usize> Div for Dual<T, W> {
    type Output = Self;

    #[inline(always)]
    fn div(self, rhs: Self) -> Self {
        let inv = Float::recip(rhs.v);
        let v = self.v * inv;
        let mut dv = self.dv;
        for (d, r) in dv.iter_mut().zip(rhs.dv.iter()) {
            *d = (*d - v * *r) * inv;
        }
        Dual { v, dv }
    }
}

impl<T: Real, const W: usize> Neg for Dual<T, W> {
    type Output = Self;

    #[inline(always)]
    fn neg(self) -> Self {
        let mut dv = self.dv;
        for d in dv.iter_mut() {
            *d = -*d;
        }
        Dual { v: -self.v, dv }
    }
}

impl<T: Real, const W: usize> Scalar for Dual<T, W> {
    type Real = T;

    #[inline(always)]
    fn from_real(x: T) -> Self {
        Dual::constant(x)
    }

    #[inline(always)]
    fn value(&self) -> T {
        self.v
    }

    #[inline(always)]
    fn sqrt(self) -> Self {
        let s = Float::sqrt(self.v);
        self.map_tangents(s, Float::recip(s + s))
    }

    #[inline(always)]
    fn relu(self) -> Self {
        // Subgradient 0 at exactly 0: the zero branch wins the tie.
        if self.v > T::zero() {
            self
        } else if self.v.is_nan() {
            self
        } else {
            Dual::constant(T::zero())
        }
    }

    #[inline(always)]
    fn exp(self) -> Self {
        let e = Float::exp(self.v);
        self.map_tangents(e, e)
    }

    #[inline(always)]
    fn ln(self) -> Self {
        self.map_tangents(Float::ln(self.v), Float::recip(self.v))
    }

    #[inline(always)]
    fn sigmoid(self) -> Self {
        let s = sigmoid_raw(self.v);
        self.map_tangents(s, s * (T::one() - s))
    }

    #[inline(always)]
    fn softplus(self) -> Self {
        self.map_tangents(softplus_raw(self.v), sigmoid_raw(self.v))
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.dv.iter().all(|d| d.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn var(x: f64) -> Dual1<f64> {
        Dual::variable(x, 0)
    }

    /// Central finite difference of a scalar function.
    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_analytic_at_random_points() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let x: f64 = rng.gen_range(0.1..4.0);
            let y: f64 = rng.gen_range(0.1..4.0);

            let cases: Vec<(Dual1<f64>, f64)> = vec![
                (var(x) + Dual::constant(y), 1.0),
                (var(x) - Dual::constant(y), 1.0),
                (var(x) * Dual::constant(y), y),
                (var(x) / Dual::constant(y), 1.0 / y),
                (Dual::constant(y) / var(x), -y / (x * x)),
                (var(x).sqrt(), 0.5 / x.sqrt()),
                (var(x).exp(), x.exp()),
                (var(x).ln(), 1.0 / x),
                (var(x).relu(), 1.0),
                ((-var(x)).relu(), 0.0),
                (var(x).sigmoid(), {
                    let s = sigmoid_raw(x);
                    s * (1.0 - s)
                }),
                (var(x).softplus(), sigmoid_raw(x)),
            ];
            for (got, want) in cases {
                assert!(
                    (got.dv[0] - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "tangent {} != analytic {}",
                    got.dv[0],
                    want
                );
            }
        }
    }

    #[test]
    fn composition_matches_finite_differences() {
        let f = |x: f64| ((x * x + 1.0).sqrt().ln() + x).softplus();
        let fdual = |x: Dual1<f64>| {
            ((x * x + Dual::constant(1.0)).sqrt().ln() + x).softplus()
        };
        for &x in &[0.3, 1.0, 2.2] {
            let d = fdual(var(x));
            assert!((d.v - f(x)).abs() < 1e-14);
            assert!((d.dv[0] - fd(f, x)).abs() < 1e-6);
        }
    }

    #[test]
    fn relu_tangent_is_zero_at_zero() {
        let z = var(0.0).relu();
        assert_eq!(z.v, 0.0);
        assert_eq!(z.dv[0], 0.0);
    }

    #[test]
    fn three_slot_gradient_of_a_product() {
        // f(a, b, c) = a * b + c, seeded one slot per variable.
        let a = Dual3::<f64>::variable(2.0, 0);
        let b = Dual3::<f64>::variable(3.0, 1);
        let c = Dual3::<f64>::variable(5.0, 2);
        let f = a * b + c;
        assert_eq!(f.v, 11.0);
        assert_eq!(f.dv, [3.0, 2.0, 1.0]);
    }
}
