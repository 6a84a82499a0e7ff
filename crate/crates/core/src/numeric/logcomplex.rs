use std::ops::{Div, Mul};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{LogReal, Real, Sign};

/// Wrap an angle into (−π, π].
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut r = phi % two_pi;
    if r > T::PI() {
        r = r - two_pi;
    } else if r <= -T::PI() {
        r = r + two_pi;
    }
    r
}

/// A complex number stored as log-magnitude and phase, with an explicit zero flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComplex<T> {
    logmag: T,
    phase: T,
    zero: bool,
}

impl<T: Real> LogComplex<T> {
    pub fn zero() -> Self {
        LogComplex { logmag: T::zero(), phase: T::zero(), zero: true }
    }

    pub fn one() -> Self {
        LogComplex { logmag: T::zero(), phase: T::zero(), zero: false }
    }

    pub fn from_polar_log(logmag: T, phase: T) -> Self {
        if logmag == T::neg_infinity() {
            return Self::zero();
        }
        debug_assert!(logmag.is_finite(), "non-finite logmag {logmag:?}");
        LogComplex { logmag, phase: wrap_phase(phase), zero: false }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        if z.re == T::zero() && z.im == T::zero() {
            return Self::zero();
        }
        Self::from_polar_log(z.norm().ln(), z.arg())
    }

    pub fn from_real(x: LogReal<T>) -> Self {
        match x.sign() {
            Sign::Zero => Self::zero(),
            Sign::Pos => Self::from_polar_log(x.logmag(), T::zero()),
            Sign::Neg => Self::from_polar_log(x.logmag(), T::PI()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn logmag(&self) -> T {
        self.logmag
    }

    pub fn ln_abs(&self) -> T {
        if self.zero {
            T::neg_infinity()
        } else {
            self.logmag
        }
    }

    pub fn phase(&self) -> T {
        self.phase
    }

    pub fn abs(&self) -> LogReal<T> {
        if self.zero {
            LogReal::zero()
        } else {
            LogReal::from_log(self.logmag)
        }
    }

    pub fn to_complex(&self) -> Complex<T> {
        if self.zero {
            return Complex::new(T::zero(), T::zero());
        }
        Complex::from_polar(self.logmag.exp(), self.phase)
    }

    pub fn conj(&self) -> Self {
        if self.zero {
            return *self;
        }
        LogComplex { logmag: self.logmag, phase: wrap_phase(-self.phase), zero: false }
    }

    pub fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.zero {
            return *self;
        }
        let k = T::lit(n as f64);
        Self::from_polar_log(self.logmag * k, self.phase * k)
    }

    pub fn recip(&self) -> Self {
        assert!(!self.zero, "reciprocal of zero");
        Self::from_polar_log(-self.logmag, -self.phase)
    }

    /// Multiply by `e^c`.
    pub fn scale_log(&self, c: T) -> Self {
        if self.zero {
            return *self;
        }
        LogComplex { logmag: self.logmag + c, ..*self }
    }

    pub fn rotate(&self, angle: T) -> Self {
        if self.zero {
            return *self;
        }
        LogComplex { phase: wrap_phase(self.phase + angle), ..*self }
    }

    pub fn neg(&self) -> Self {
        self.rotate(T::PI())
    }
}

impl<T: Real> Mul for LogComplex<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.zero || rhs.zero {
            return Self::zero();
        }
        Self::from_polar_log(self.logmag + rhs.logmag, self.phase + rhs.phase)
    }
}

impl<T: Real> Div for LogComplex<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Real> Default for LogComplex<T> {
    fn default() -> Self {
        Self::zero()
    }
}
