use serde::Serialize;

use super::{LogComplex, LogReal, Real, Sign};

/// Result of a log-domain summation together with its accuracy flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogSum<V> {
    pub value: V,
    /// The compensated residual fell below the cancellation floor relative to the largest term;
    /// `value` is then an exact zero standing in for an unresolved small number.
    pub cancelled: bool,
    /// Number of non-zero terms that entered the sum.
    pub terms: usize,
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Neumaier<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Neumaier<T> {
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn total(&self) -> T {
        self.sum + self.comp
    }
}

/// Sum of signed log-domain reals.
///
/// The largest magnitude is factored out, the scaled residual ratios are accumulated with
/// Neumaier compensation and the sign is read off the residual. An empty input is an exact
/// zero.
pub fn log_sum<T: Real>(terms: &[LogReal<T>]) -> LogSum<LogReal<T>> {
    let mut max = T::neg_infinity();
    let mut count = 0;
    for t in terms.iter().filter(|t| !t.is_zero()) {
        max = max.max(t.logmag());
        count += 1;
    }
    if count == 0 {
        return LogSum { value: LogReal::zero(), cancelled: false, terms: 0 };
    }
    let mut acc = Neumaier::default();
    for t in terms.iter().filter(|t| !t.is_zero()) {
        let r = (t.logmag() - max).exp();
        acc.add(if t.sign() == Sign::Neg { -r } else { r });
    }
    let s = acc.total();
    if s.abs() < T::cancellation_floor() {
        return LogSum { value: LogReal::zero(), cancelled: true, terms: count };
    }
    LogSum {
        value: LogReal::from_parts(Sign::of(s), max + s.abs().ln()),
        cancelled: false,
        terms: count,
    }
}

/// Convenience wrapper for sums of positive terms given by their logs.
pub fn log_sum_exp<T: Real>(logs: &[T]) -> T {
    let terms: Vec<LogReal<T>> = logs.iter().map(|&l| LogReal::from_log(l)).collect();
    log_sum(&terms).value.ln_abs()
}

/// Complex analogue of [`log_sum`]; the residual is resolved in both components.
pub fn log_sum_complex<T: Real>(terms: &[LogComplex<T>]) -> LogSum<LogComplex<T>> {
    let mut max = T::neg_infinity();
    let mut count = 0;
    for t in terms.iter().filter(|t| !t.is_zero()) {
        max = max.max(t.logmag());
        count += 1;
    }
    if count == 0 {
        return LogSum { value: LogComplex::zero(), cancelled: false, terms: 0 };
    }
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for t in terms.iter().filter(|t| !t.is_zero()) {
        let r = (t.logmag() - max).exp();
        let (s, c) = t.phase().sin_cos();
        re.add(r * c);
        im.add(r * s);
    }
    let (x, y) = (re.total(), im.total());
    let modulus = x.hypot(y);
    if modulus < T::cancellation_floor() || modulus.is_zero() {
        return LogSum { value: LogComplex::zero(), cancelled: true, terms: count };
    }
    LogSum {
        value: LogComplex::from_polar_log(max + modulus.ln(), y.atan2(x)),
        cancelled: false,
        terms: count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_plus_one() {
        let s = log_sum(&[LogReal::<f64>::one(), LogReal::one()]);
        assert_eq!(s.value.sign(), Sign::Pos);
        assert!((s.value.logmag() - 2f64.ln()).abs() < 1e-15);
        assert!(!s.cancelled);
    }

    #[test]
    fn exact_cancellation_is_flagged() {
        let s = log_sum(&[LogReal::<f64>::one(), -LogReal::one()]);
        assert!(s.value.is_zero());
        assert!(s.cancelled);
    }

    #[test]
    fn empty_is_exact_zero() {
        let s = log_sum::<f64>(&[]);
        assert!(s.value.is_zero());
        assert!(!s.cancelled);
        assert_eq!(s.terms, 0);
    }

    #[test]
    fn many_equal_terms() {
        // small-scale exact oracle: 10 copies of e^7
        let small: Vec<_> = (0..10).map(|_| LogReal::<f64>::from_log(7.0)).collect();
        let direct = (0..10).map(|_| 7f64.exp()).sum::<f64>().ln();
        assert!((log_sum(&small).value.logmag() - direct).abs() < 1e-13);

        let big: Vec<_> = (0..1000).map(|_| LogReal::<f64>::from_log(700.0)).collect();
        let s = log_sum(&big).value;
        assert!((s.logmag() - (700.0 + 1000f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn negative_result_sign() {
        let s = log_sum(&[LogReal::<f64>::from_value(2.0), LogReal::from_value(-5.0)]).value;
        assert_eq!(s.sign(), Sign::Neg);
        assert!((s.value() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn complex_cases() {
        let pi = std::f64::consts::PI;
        let a = LogComplex::from_polar_log(0.0, 0.0);
        let b = LogComplex::from_polar_log(0.0, pi);
        let s = log_sum_complex(&[a, b]);
        assert!(s.value.is_zero() && s.cancelled);

        let c = LogComplex::from_polar_log(0.0, pi / 2.0);
        let s = log_sum_complex(&[a, c]).value;
        assert!((s.logmag() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((s.phase() - pi / 4.0).abs() < 1e-15);

        let roots: Vec<_> = (0..5)
            .map(|k| LogComplex::from_polar_log(0.0, 2.0 * pi * k as f64 / 5.0))
            .collect();
        // direct summation oracle
        let direct: num_complex::Complex64 = roots.iter().map(|r| r.to_complex()).sum();
        assert!(direct.norm() < 1e-14);
        assert!(log_sum_complex(&roots).value.is_zero());
    }

    #[test]
    fn f32_instantiation() {
        let s = log_sum(&[LogReal::<f32>::from_log(3.0), LogReal::from_log(3.0)]).value;
        assert!((s.logmag() - (3.0 + 2f32.ln())).abs() < 1e-6);
    }
}
