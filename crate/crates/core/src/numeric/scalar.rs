use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Floating point scalar the log-domain machinery is written against: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an f64 literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float")
    }

    /// Relative threshold below which a compensated sum is declared cancelled.
    fn cancellation_floor() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar used where a formula can be evaluated exactly (rationals) or in floating
/// point with the same code.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    const EXACT: bool;

    fn from_i64(i: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn from_i64(i: i64) -> Self {
        i as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_i64(i: i64) -> Self {
        i as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

macro_rules! exact_ratio {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            const EXACT: bool = true;
            fn from_i64(i: i64) -> Self {
                Ratio::from_integer(i as $int)
            }
            fn to_f64(&self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    };
}

exact_ratio!(i64);
exact_ratio!(i128);
