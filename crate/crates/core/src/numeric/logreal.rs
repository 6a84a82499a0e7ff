use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Serialize};

use super::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of<T: Real>(x: T) -> Sign {
        if x > T::zero() {
            Sign::Pos
        } else if x < T::zero() {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match self.as_i8() * other.as_i8() {
            1 => Sign::Pos,
            -1 => Sign::Neg,
            _ => Sign::Zero,
        }
    }
}

/// A signed real stored as sign and natural log of its magnitude.
///
/// Zero is a tagged state; the stored `logmag` of a zero is meaningless and normalised to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReal<T> {
    sign: Sign,
    logmag: T,
}

impl<T: Real> LogReal<T> {
    pub fn zero() -> Self {
        LogReal { sign: Sign::Zero, logmag: T::zero() }
    }

    pub fn one() -> Self {
        LogReal { sign: Sign::Pos, logmag: T::zero() }
    }

    /// Positive number `e^logmag`. A `-inf` log is read as zero.
    pub fn from_log(logmag: T) -> Self {
        Self::from_parts(Sign::Pos, logmag)
    }

    pub fn from_parts(sign: Sign, logmag: T) -> Self {
        if sign == Sign::Zero || logmag == T::neg_infinity() {
            return Self::zero();
        }
        debug_assert!(logmag.is_finite(), "non-finite logmag {logmag:?}");
        LogReal { sign, logmag }
    }

    pub fn from_value(x: T) -> Self {
        match Sign::of(x) {
            Sign::Zero => Self::zero(),
            s => LogReal { sign: s, logmag: x.abs().ln() },
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn logmag(&self) -> T {
        self.logmag
    }

    /// Natural log of the magnitude, `-inf` for zero.
    pub fn ln_abs(&self) -> T {
        if self.is_zero() {
            T::neg_infinity()
        } else {
            self.logmag
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Pos
    }

    /// Plain value; overflows to ±inf or underflows to 0 outside the float range.
    pub fn value(&self) -> T {
        match self.sign {
            Sign::Zero => T::zero(),
            Sign::Pos => self.logmag.exp(),
            Sign::Neg => -self.logmag.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        match self.sign {
            Sign::Zero => *self,
            _ => LogReal { sign: Sign::Pos, logmag: self.logmag },
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        match self.sign {
            Sign::Zero => *self,
            s => {
                let sign = if s == Sign::Neg && n % 2 != 0 { Sign::Neg } else { Sign::Pos };
                LogReal { sign, logmag: self.logmag * T::lit(n as f64) }
            }
        }
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.sign != Sign::Neg, "sqrt of a negative LogReal");
        match self.sign {
            Sign::Zero => *self,
            _ => LogReal { sign: Sign::Pos, logmag: self.logmag * T::lit(0.5) },
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        LogReal { sign: self.sign, logmag: -self.logmag }
    }

    /// Multiply by `e^c`.
    pub fn scale_log(&self, c: T) -> Self {
        match self.sign {
            Sign::Zero => *self,
            s => LogReal { sign: s, logmag: self.logmag + c },
        }
    }

    /// Total order on the represented values.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let (a, b) = (self.sign.as_i8(), other.sign.as_i8());
        if a != b {
            return a.cmp(&b);
        }
        let by_mag = self.logmag.partial_cmp(&other.logmag).unwrap_or(Ordering::Equal);
        match self.sign {
            Sign::Zero => Ordering::Equal,
            Sign::Pos => by_mag,
            Sign::Neg => by_mag.reverse(),
        }
    }
}

impl<T: Real> Mul for LogReal<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let sign = self.sign.times(rhs.sign);
        if sign == Sign::Zero {
            return Self::zero();
        }
        LogReal { sign, logmag: self.logmag + rhs.logmag }
    }
}

impl<T: Real> Div for LogReal<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Real> Neg for LogReal<T> {
    type Output = Self;
    fn neg(self) -> Self {
        let sign = match self.sign {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
        };
        LogReal { sign, logmag: self.logmag }
    }
}

impl<T: Real> Default for LogReal<T> {
    fn default() -> Self {
        Self::zero()
    }
}
