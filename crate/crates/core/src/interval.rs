//! Closed real intervals with classic (correlation-blind) arithmetic.
//!
//! Endpoints are plain `f64`; no directed rounding is performed. Callers on
//! soundness-critical paths widen results with [`Interval::inflate`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::IntervalError;

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    /// Builds `[lo, hi]`, rejecting reversed or NaN endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::Reversed { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "degenerate interval from NaN");
        Interval { lo: x, hi: x }
    }

    /// Smallest interval containing both values, in either order.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub(crate) fn from_sorted_unchecked(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Largest absolute value attained.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widens both endpoints outward by `eps`.
    pub fn inflate(&self, eps: f64) -> Interval {
        Interval {
            lo: self.lo - eps,
            hi: self.hi + eps,
        }
    }

    /// Maps `t` in `[0, 1]` to `lo + t * width`.
    pub fn at(&self, t: f64) -> f64 {
        self.lo + t * self.width()
    }

    pub fn scale(&self, k: f64) -> Interval {
        Interval::hull_of(self.lo * k, self.hi * k)
    }

    /// Exact range of `x^2`, tighter than `self * self` when the interval
    /// straddles zero.
    pub fn sqr(&self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.contains_zero() {
            Interval { lo: 0.0, hi: a.max(b) }
        } else {
            Interval::hull_of(a, b)
        }
    }

    /// Principal square root of the non-negative part; `None` if the
    /// interval lies entirely below zero.
    pub fn sqrt(&self) -> Option<Interval> {
        if self.hi < 0.0 {
            return None;
        }
        Some(Interval {
            lo: self.lo.max(0.0).sqrt(),
            hi: self.hi.sqrt(),
        })
    }

    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByIntervalContainingZero {
                lo: rhs.lo,
                hi: rhs.hi,
            });
        }
        let inv = Interval {
            lo: 1.0 / rhs.hi,
            hi: 1.0 / rhs.lo,
        };
        Ok(*self * inv)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = IntervalError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;

    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;

    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

pub fn interval_add(a: Interval, b: Interval) -> Interval {
    a + b
}

pub fn interval_sub(a: Interval, b: Interval) -> Interval {
    a - b
}

pub fn interval_mul(a: Interval, b: Interval) -> Interval {
    a * b
}

pub fn interval_div(a: Interval, b: Interval) -> Result<Interval, IntervalError> {
    a.checked_div(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(iv(1.0, 2.0) + iv(3.0, 4.0), iv(4.0, 6.0));
        assert_eq!(iv(1.0, 2.0) - iv(1.0, 2.0), iv(-1.0, 1.0));
    }

    #[test]
    fn mixed_sign_product_matches_endpoint_enumeration() {
        // brute force over a grid of the operands
        let a = iv(-1.0, 2.0);
        let b = iv(3.0, 4.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=300 {
            for j in 0..=100 {
                let x = a.at(i as f64 / 300.0);
                let y = b.at(j as f64 / 100.0);
                lo = lo.min(x * y);
                hi = hi.max(x * y);
            }
        }
        assert_eq!((lo, hi), (-4.0, 8.0));
        assert_eq!(a * b, iv(-4.0, 8.0));
    }

    #[test]
    fn reversed_endpoints_rejected() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(5.0, 5.0).unwrap().is_degenerate());
    }

    #[test]
    fn division_by_zero_straddling_interval() {
        let err = interval_div(iv(1.0, 2.0), iv(-1.0, 1.0)).unwrap_err();
        assert!(matches!(
            err,
            IntervalError::DivisionByIntervalContainingZero { .. }
        ));
        assert_eq!(
            interval_div(iv(1.0, 2.0), iv(2.0, 4.0)).unwrap(),
            iv(0.25, 1.0)
        );
    }

    #[test]
    fn sqr_is_exact_across_zero() {
        assert_eq!(iv(-1.0, 2.0).sqr(), iv(0.0, 4.0));
        assert_eq!(iv(-3.0, -2.0).sqr(), iv(4.0, 9.0));
        assert_eq!(iv(-1.0, 2.0) * iv(-1.0, 2.0), iv(-2.0, 4.0));
    }

    fn interval_strategy() -> impl Strategy<Value = Interval> {
        (-10.0f64..10.0, 0.0f64..5.0).prop_map(|(lo, w)| iv(lo, lo + w))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2500))]

        #[test]
        fn ops_are_inclusion_correct(
            a in interval_strategy(),
            b in interval_strategy(),
            s in 0.0f64..=1.0,
            t in 0.0f64..=1.0,
        ) {
            let x = a.at(s);
            let y = b.at(t);
            prop_assert!((a + b).contains(x + y));
            prop_assert!((a - b).contains(x - y));
            prop_assert!((a * b).inflate(1e-12).contains(x * y));
            if !b.contains_zero() {
                prop_assert!(a.checked_div(&b).unwrap().inflate(1e-12).contains(x / y));
            }
            prop_assert!(a.sqr().inflate(1e-12).contains(x * x));
        }
    }
}
