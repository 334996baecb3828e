//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`
//! with `|lo| ≤ ulp(hi)/2`, giving about 106 significant bits.
//!
//! Addition, multiplication, division and square root follow the classic
//! error-free-transformation algorithms (Dekker, Knuth, and the QD
//! library); `exp` uses argument reduction plus a Taylor series, `ln` one
//! Newton step on `exp`. Trigonometric functions are only accurate to
//! double precision; they are used for drawing random phases, nothing
//! more.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        Self { hi: h, lo: l }
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    /// Exact scaling by `2^k`.
    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    fn exp_impl(self) -> Self {
        if self.hi > 709.7 {
            return Self::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::zero();
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::one();
        }
        let m = (self.hi / LN2.hi).round();
        // r in [-ln2/1024, ln2/1024] after the 2^-9 scaling
        let r = (self - LN2.mul_f64(m)).ldexp(-9);
        let mut term = r;
        let mut sum = r;
        for i in 2..40 {
            term = (term * r) / Self::from(i as f64);
            sum = sum + term;
            if term.hi.abs() <= 1e-36 * sum.hi.abs().max(1e-300) {
                break;
            }
        }
        // e^{2r} − 1 = 2s + s² where s = e^r − 1
        for _ in 0..9 {
            sum = sum.ldexp(1) + sum * sum;
        }
        (sum + Self::one()).ldexp(m as i32)
    }

    fn ln_impl(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from(f64::NAN);
        }
        if self.hi == 1.0 && self.lo == 0.0 {
            return Self::zero();
        }
        if !self.hi.is_finite() {
            return self;
        }
        // one Newton step on exp(x) = a doubles the f64 accuracy
        let x = Self::from(self.hi.ln());
        x + self * (-x).exp_impl() - Self::one()
    }
}

impl From<f64> for DoubleDouble {
    #[inline]
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Self::renorm(p, e + (self.hi * rhs.lo + self.lo * rhs.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs.mul_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs.mul_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from(q3)
    }
}

impl Zero for DoubleDouble {
    #[inline]
    fn zero() -> Self {
        Self { hi: 0.0, lo: 0.0 }
    }

    #[inline]
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    #[inline]
    fn one() -> Self {
        Self { hi: 1.0, lo: 0.0 }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&(self.hi + self.lo), f)
    }
}

impl fmt::LowerExp for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&(self.hi + self.lo), f)
    }
}

impl Real for DoubleDouble {
    // 2^-104
    const UNIT_ROUNDOFF: f64 = 4.930_380_657_631_324e-32;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.hi + self.lo
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::zero()
            } else {
                Self::from(f64::NAN)
            };
        }
        let q = self.hi.sqrt();
        let (p, e) = two_prod(q, q);
        let resid = (self - Self { hi: p, lo: e }).hi;
        Self::renorm(q, resid / (2.0 * q))
    }

    #[inline]
    fn ln(self) -> Self {
        self.ln_impl()
    }

    #[inline]
    fn exp(self) -> Self {
        self.exp_impl()
    }

    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.hi.sin_cos();
        (Self::renorm(s, self.lo * c), Self::renorm(c, -self.lo * s))
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    fn log2(self) -> Self {
        self.ln_impl() / LN2
    }
}
