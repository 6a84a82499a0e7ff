//! Adaptive Gauss–Kronrod quadrature carried out entirely in the log domain.
//!
//! Integrands are supplied as `t ↦ log f(t)` (a [`LogReal`]), so quantities such as
//! `e^{(2n+2)t − ψ(t)}` can be integrated even when neither the integrand nor the integral fits
//! in a float. Each panel is evaluated relative to its own largest node value; panels are
//! combined with [`log_sum`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use super::{log_sum, LogReal, Real, Sign};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss 7-point weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec<T> {
    pub rel_tol: T,
    pub max_subdivisions: usize,
    /// Integration window in the log-radius coordinate.
    pub window: (T, T),
    /// Interior points where the window is pre-split (peaks, kinks).
    pub breakpoints: Vec<T>,
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(window: (T, T), rel_tol: T) -> Self {
        QuadratureSpec { rel_tol, max_subdivisions: 2000, window, breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, pts: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints.extend(pts);
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn validate(&self) -> Result<(), QuadError> {
        let (a, b) = self.window;
        if !(self.rel_tol > T::zero() && self.rel_tol < T::one()) {
            return Err(QuadError::InvalidSpec(format!(
                "relative tolerance {:?} outside (0, 1)",
                self.rel_tol
            )));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(QuadError::InvalidSpec(format!("window ({a:?}, {b:?}) is not a finite interval")));
        }
        if self.max_subdivisions == 0 {
            return Err(QuadError::InvalidSpec("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult<T> {
    pub value: LogReal<T>,
    /// Natural log of the absolute error estimate (`-inf` when the estimate is exactly zero).
    pub log_error: T,
    pub subdivisions: usize,
}

impl<T: Real> QuadResult<T> {
    /// Error estimate relative to the result.
    pub fn relative_error(&self) -> T {
        if self.value.is_zero() {
            return T::zero();
        }
        (self.log_error - self.value.logmag()).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge after {subdivisions} subdivisions (best log estimate {estimate_log}, log error {error_log})")]
    MaxSubdivisions { estimate_log: f64, error_log: f64, subdivisions: usize },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug)]
struct Panel<T> {
    a: T,
    b: T,
    value: LogReal<T>,
    error: LogReal<T>,
    /// Largest `|log f|` at the nodes.
    log_scale: T,
}

impl<T: Real> Panel<T> {
    fn eval<F: Fn(T) -> LogReal<T>>(f: &F, a: T, b: T) -> Self {
        let half = (b - a) * T::lit(0.5);
        let center = a + half;
        let mut vals = [LogReal::zero(); 15];
        for i in 0..7 {
            let dx = half * T::lit(XGK[i]);
            vals[2 * i] = f(center - dx);
            vals[2 * i + 1] = f(center + dx);
        }
        vals[14] = f(center);
        let max = vals
            .iter()
            .filter(|v| !v.is_zero())
            .map(|v| v.logmag())
            .fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return Panel { a, b, value: LogReal::zero(), error: LogReal::zero(), log_scale: T::zero() };
        }
        let log_scale = vals.iter().filter(|v| !v.is_zero()).map(|v| v.logmag().abs()).fold(T::zero(), T::max);
        let scaled = |v: &LogReal<T>| -> T {
            match v.sign() {
                Sign::Zero => T::zero(),
                Sign::Pos => (v.logmag() - max).exp(),
                Sign::Neg => -(v.logmag() - max).exp(),
            }
        };
        let mut kron = T::lit(WGK[7]) * scaled(&vals[14]);
        let mut gauss = T::lit(WG[3]) * scaled(&vals[14]);
        for i in 0..7 {
            let pair = scaled(&vals[2 * i]) + scaled(&vals[2 * i + 1]);
            kron = kron + T::lit(WGK[i]) * pair;
            if i % 2 == 1 {
                gauss = gauss + T::lit(WG[i / 2]) * pair;
            }
        }
        let shift = max + half.ln();
        Panel {
            a,
            b,
            value: LogReal::from_value(kron).scale_log(shift),
            error: LogReal::from_value((kron - gauss).abs()).scale_log(shift),
            log_scale,
        }
    }
}

struct ByError<T>(Panel<T>);

impl<T: Real> PartialEq for ByError<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for ByError<T> {}
impl<T: Real> PartialOrd for ByError<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for ByError<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .error
            .cmp_value(&other.0.error)
            .then_with(|| other.0.a.partial_cmp(&self.0.a).unwrap_or(Ordering::Equal))
    }
}

pub const ROUNDOFF_FACTOR: f64 = 8.0;

/// Adaptive bisection of `∫ e^{log f(t)} dt` over `spec.window`.
///
/// The panel with the largest error estimate is bisected until the summed error estimate is
/// within `rel_tol` of the summed value. The tolerance is floored at `ROUNDOFF_FACTOR·ε·max|log f|`,
/// the relative noise in the integrand values themselves. Exhausting `max_subdivisions` returns the best estimate
/// inside the error.
pub fn integrate_log<T, F>(f: F, spec: &QuadratureSpec<T>) -> Result<QuadResult<T>, QuadError>
where
    T: Real,
    F: Fn(T) -> LogReal<T>,
{
    spec.validate()?;
    let (lo, hi) = spec.window;
    let mut cuts: Vec<T> = spec.breakpoints.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    // Panels that can no longer be split in floating point.
    let mut frozen: Vec<Panel<T>> = Vec::new();
    for w in edges.windows(2) {
        heap.push(ByError(Panel::eval(&f, w[0], w[1])));
    }
    let mut subdivisions = 0usize;
    loop {
        let panels: Vec<&Panel<T>> = heap.iter().map(|p| &p.0).chain(frozen.iter()).collect();
        let noise = panels.iter().map(|p| p.log_scale).fold(T::zero(), T::max) * T::epsilon() * T::lit(ROUNDOFF_FACTOR);
        let log_tol = spec.rel_tol.max(noise).ln();
        let values: Vec<LogReal<T>> = panels.iter().map(|p| p.value).collect();
        let errors: Vec<LogReal<T>> = panels.iter().map(|p| p.error).collect();
        let total = log_sum(&values).value;
        let err = log_sum(&errors).value;
        let converged = err.is_zero() || (!total.is_zero() && err.logmag() <= total.logmag() + log_tol);
        if converged || heap.is_empty() {
            return Ok(QuadResult { value: total, log_error: err.ln_abs(), subdivisions });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(QuadError::MaxSubdivisions {
                estimate_log: total.ln_abs().as_f64(),
                error_log: err.ln_abs().as_f64(),
                subdivisions,
            });
        }
        let ByError(worst) = heap.pop().expect("non-empty heap");
        let mid = worst.a + (worst.b - worst.a) * T::lit(0.5);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= T::epsilon() * mid.abs() * T::lit(8.0) {
            frozen.push(worst);
            continue;
        }
        heap.push(ByError(Panel::eval(&f, worst.a, mid)));
        heap.push(ByError(Panel::eval(&f, mid, worst.b)));
        subdivisions += 1;
    }
}
