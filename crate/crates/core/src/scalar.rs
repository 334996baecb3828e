//! Scalar abstraction shared by every numerical routine in the crate.

mod double_double;

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, One, Zero};

pub use double_double::DoubleDouble;

/// Real scalar usable by the Gaussian-state routines.
///
/// `f64` is the everyday choice. [`DoubleDouble`] (~106 bits) is used for
/// key-rate evaluation at large modulation variance, where covariance
/// entries grow like `V` and the small symplectic eigenvalues are only
/// resolved to about `V² · UNIT_ROUNDOFF`.
///
/// The trait asks for the handful of elementary functions the engine
/// needs rather than all of [`num_traits::Float`]; primitive floats get it
/// through their `Float` implementation.
pub trait Real:
    Copy
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Unit roundoff of the representation.
    const UNIT_ROUNDOFF: f64;

    /// Converts an `f64` (exactly where the type allows it).
    fn lit(x: f64) -> Self;

    /// Nearest `f64`.
    fn to_f64_lossy(self) -> f64;

    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn is_finite(self) -> bool;

    #[inline]
    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn signum(self) -> Self {
        if self < Self::zero() {
            -Self::one()
        } else {
            Self::one()
        }
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn recip(self) -> Self {
        Self::one() / self
    }

    #[inline]
    fn log2(self) -> Self {
        self.ln() / Self::lit(2.0).ln()
    }
}

macro_rules! impl_primitive {
    ($t:ty) => {
        impl Real for $t {
            const UNIT_ROUNDOFF: f64 = <$t>::EPSILON as f64 / 2.0;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }

            #[inline]
            fn ln(self) -> Self {
                Float::ln(self)
            }

            #[inline]
            fn exp(self) -> Self {
                Float::exp(self)
            }

            #[inline]
            fn sin_cos(self) -> (Self, Self) {
                Float::sin_cos(self)
            }

            #[inline]
            fn is_finite(self) -> bool {
                Float::is_finite(self)
            }

            #[inline]
            fn abs(self) -> Self {
                Float::abs(self)
            }

            #[inline]
            fn log2(self) -> Self {
                Float::log2(self)
            }
        }
    };
}

impl_primitive!(f32);
impl_primitive!(f64);
