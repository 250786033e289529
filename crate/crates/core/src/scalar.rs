//! Scalar abstractions.
//!
//! Everything that only needs field arithmetic and an order (rigid rotations,
//! Dehn twists, rotation-interval and deviation estimators) is written against
//! [`Scalar`], which is implemented for `f32`, `f64` and the exact
//! [`Rational`](crate::Rational) type. Maps that evaluate transcendental
//! functions (skew products, the compactified counterexample) require
//! [`RealScalar`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element usable as a plane coordinate.
pub trait Scalar:
    Copy + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Converts from `f64`, panicking on values the type cannot represent.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    /// The ratio `num / den`.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer") / Self::from_i64(den).expect("integer")
    }

    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer")
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest integer not exceeding `self`.
    fn floor_int(self) -> i64;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Euclidean norm, evaluated in `f64` for exact types.
    fn hypot_f64(a: Self, b: Self) -> f64 {
        a.f64().hypot(b.f64())
    }
}

/// Scalar with the elementary functions of `num_traits::Float`.
pub trait RealScalar: Scalar + Float + FloatConst {}

impl Scalar for f64 {
    fn floor_int(self) -> i64 {
        self.floor() as i64
    }
}

impl Scalar for f32 {
    fn floor_int(self) -> i64 {
        self.floor() as i64
    }
}

impl Scalar for Ratio<i64> {
    fn floor_int(self) -> i64 {
        self.floor().to_integer()
    }

    /// Rounds to the nearest multiple of `2^-24`.
    fn of(x: f64) -> Self {
        const DEN: i64 = 1 << 24;
        let n = (x * DEN as f64).round();
        assert!(n.abs() < 9.0e15, "{x} is not representable");
        Ratio::new(n as i64, DEN)
    }
}

impl RealScalar for f64 {}
impl RealScalar for f32 {}

/// Distance on the circle ℝ/ℤ.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn rational_floor_and_ratio() {
        let r = Rational::ratio(-7, 2);
        assert_eq!(r.floor_int(), -4);
        assert_eq!(Rational::ratio(6, 3), Rational::int(2));
        assert_eq!(Rational::of(0.25), Rational::new(1, 4));
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.95, 0.05) - 0.1).abs() < 1e-12);
        assert!((circle_distance(1.3, 0.3)).abs() < 1e-12);
        assert!((circle_distance(-0.25, 0.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frac_is_half_open() {
        assert_eq!(frac(-1e-20), 0.0);
        assert!((frac(2.75) - 0.75).abs() < 1e-15);
        assert!((0.0..1.0).contains(&frac(-0.3)));
    }
}
