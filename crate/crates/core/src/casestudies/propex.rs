//! Moments of the atomic measure `Σ_k e^{−s_k t_k} δ_{e^{s_k}}` and the convexity screen that
//! separates them from moments of monotone weights.

use serde::Serialize;

use crate::numeric::{convex_fit_defect, log_sum_exp};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleMoments {
    pub t: Vec<u64>,
    pub s: Vec<f64>,
    /// `p_n = log Σ_k e^{(n − t_k)s_k}` for `n = 0..=n_max`.
    pub p: Vec<f64>,
    /// `max_k (n − t_k)s_k`.
    pub prediction: Vec<f64>,
    /// `max_n (p_n − prediction_n)`, between 0 and `log K`.
    pub max_deviation: f64,
}

pub fn build_counterexample_moments(t: &[u64], s: &[f64], n_max: usize) -> Result<CounterexampleMoments> {
    if t.is_empty() || t.len() != s.len() {
        return Err(Error::Invalid(format!("{} knots and {} slopes", t.len(), s.len())));
    }
    for k in 0..t.len() {
        if !(s[k] >= 1.0 && s[k].is_finite()) {
            return Err(Error::Constraint { index: k, what: format!("s = {} is below 1", s[k]) });
        }
        if k > 0 && t[k] <= t[k - 1] + 1 {
            return Err(Error::Constraint { index: k, what: format!("t = {} does not exceed {} + 1", t[k], t[k - 1]) });
        }
        if k > 0 && s[k] <= 2.0 * t[k] as f64 * s[k - 1] {
            return Err(Error::Constraint { index: k, what: format!("s = {} does not exceed 2·{}·{}", s[k], t[k], s[k - 1]) });
        }
    }
    let mut p = Vec::with_capacity(n_max + 1);
    let mut prediction = Vec::with_capacity(n_max + 1);
    let mut terms = vec![0.0; t.len()];
    for n in 0..=n_max {
        for k in 0..t.len() {
            terms[k] = (n as f64 - t[k] as f64) * s[k];
        }
        p.push(log_sum_exp(&terms));
        prediction.push(terms.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let max_deviation = p.iter().zip(&prediction).map(|(a, b)| a - b).fold(0.0, f64::max);
    Ok(CounterexampleMoments { t: t.to_vec(), s: s.to_vec(), p, prediction, max_deviation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    MonotoneCompatible,
    Incompatible,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreenReport {
    /// `(N, defect of x_1..x_N)`.
    pub windows: Vec<(usize, f64)>,
    pub verdict: Verdict,
    pub expect_monotone: bool,
    /// Whether the verdict is the one expected from `expect_monotone`.
    pub consistent: bool,
}

pub const MIN_SCREEN_LEN: usize = 10;
/// The last three defects must agree within this fraction to count as a plateau.
pub const PLATEAU_BAND: f64 = 0.10;
/// Growth from the first to the last window that marks the input incompatible.
pub const GROWTH_FACTOR: f64 = 1.5;
/// Defects below this are treated as zero.
pub const DEFECT_FLOOR: f64 = 1e-9;

/// Convex-fit defect of `x_n = log n + seq[n]` over `[1, N]` for each window `N`, where `seq` is
/// indexed from `n = 0`.
pub fn convexity_screen(seq: &[f64], expect_monotone: bool, windows: &[usize]) -> Result<ScreenReport> {
    if seq.len() < MIN_SCREEN_LEN {
        return Err(Error::TableTooShort { len: seq.len(), required: MIN_SCREEN_LEN });
    }
    let mut windows = windows.to_vec();
    windows.sort_unstable();
    windows.dedup();
    if windows.is_empty() || windows[0] < 3 || windows[windows.len() - 1] >= seq.len() {
        return Err(Error::Invalid(format!("windows {windows:?} must lie in 3..{}", seq.len())));
    }
    let x: Vec<f64> = (1..seq.len()).map(|n| (n as f64).ln() + seq[n]).collect();
    let defects: Vec<(usize, f64)> = windows.iter().map(|&n| (n, convex_fit_defect(&x[..n]))).collect();
    let d: Vec<f64> = defects.iter().map(|w| w.1.max(DEFECT_FLOOR)).collect();
    let tail = &d[d.len().saturating_sub(3)..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let verdict = if d[d.len() - 1] >= GROWTH_FACTOR * d[0] {
        Verdict::Incompatible
    } else if hi <= (1.0 + PLATEAU_BAND) * lo {
        Verdict::MonotoneCompatible
    } else {
        Verdict::Inconclusive
    };
    let consistent = match verdict {
        Verdict::MonotoneCompatible => expect_monotone,
        Verdict::Incompatible => !expect_monotone,
        Verdict::Inconclusive => false,
    };
    Ok(ScreenReport { windows: defects, verdict, expect_monotone, consistent })
}

/// `log m_n = log(π n!)` for `h = r²`.
pub fn gaussian_log_moments(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = std::f64::consts::PI.ln();
    for n in 0..=n_max {
        if n > 0 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Smallest admissible slopes `s_1 = 1`, `s_k = 2 t_k s_{k−1} + 1`.
pub fn admissible_slopes(t: &[u64]) -> Vec<f64> {
    let mut s: Vec<f64> = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        s.push(if k == 0 { 1.0 } else { 2.0 * t[k] as f64 * s[k - 1] + 1.0 });
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_term_hand_case() {
        let c = build_counterexample_moments(&[2, 8], &[4.0, 65.0], 10).unwrap();
        // p_5 = log(e^{12} + e^{−195})
        assert!((c.p[5] - 12.0).abs() < 1e-15);
        assert_eq!(c.prediction[5], 12.0);
        for n in 0..=10 {
            assert!(c.p[n] >= c.prediction[n] && c.p[n] - c.prediction[n] <= 2f64.ln() + 1e-15);
        }
        assert!(c.max_deviation > 0.0 && c.max_deviation <= 2f64.ln());
    }

    #[test]
    fn constraint_errors() {
        let idx = |t: &[u64], s: &[f64]| match build_counterexample_moments(t, s, 5) {
            Err(Error::Constraint { index, .. }) => index,
            other => panic!("{other:?}"),
        };
        assert_eq!(idx(&[2, 3], &[1.0, 100.0]), 1);
        assert_eq!(idx(&[8, 2], &[1.0, 100.0]), 1);
        assert_eq!(idx(&[2, 8], &[1.0, 16.0]), 1);
        assert_eq!(idx(&[2], &[0.5]), 0);
        assert!(build_counterexample_moments(&[2, 8], &[1.0], 5).is_err());
    }

    #[test]
    fn gaussian_plateau() {
        let rep = convexity_screen(&gaussian_log_moments(200), true, &[50, 100, 200]).unwrap();
        assert_eq!(rep.verdict, Verdict::MonotoneCompatible);
        assert!(rep.consistent);
    }

    #[test]
    fn squared_knots_grow() {
        // t_k ≥ t_{k−1}²: each linear stretch is long enough for the concavity of log n to show
        let t = [2, 4, 16, 256];
        let c = build_counterexample_moments(&t, &admissible_slopes(&t), 300).unwrap();
        let rep = convexity_screen(&c.p, false, &[8, 32, 256]).unwrap();
        assert_eq!(rep.verdict, Verdict::Incompatible, "{rep:?}");
    }

    #[test]
    fn three_knot_defect_is_flat() {
        // the binding stretch is n ∈ [1, 8]; brute-force triple search gives 0.2518893976458314
        let t = [2, 8, 60];
        let c = build_counterexample_moments(&t, &admissible_slopes(&t), 200).unwrap();
        let rep = convexity_screen(&c.p, false, &[50, 100, 200]).unwrap();
        for w in &rep.windows {
            assert!((w.1 - 0.2518893976458314).abs() < 1e-12, "{:?}", rep.windows);
        }
    }

    #[test]
    fn affine_invariance() {
        let t = [2, 4, 16, 256];
        let c = build_counterexample_moments(&t, &admissible_slopes(&t), 300).unwrap();
        let base = convexity_screen(&c.p, false, &[8, 32, 256]).unwrap();
        let shifted: Vec<f64> = c.p.iter().enumerate().map(|(n, v)| v + 3.5 - 0.25 * n as f64).collect();
        let other = convexity_screen(&shifted, false, &[8, 32, 256]).unwrap();
        assert_eq!(base.verdict, other.verdict);
        for (a, b) in base.windows.iter().zip(&other.windows) {
            assert!((a.1 - b.1).abs() < 1e-9 * a.1.max(1.0));
        }
    }

    #[test]
    fn linear_input_is_log_n_defect() {
        let lin: Vec<f64> = (0..50).map(|n| 2.0 * n as f64 - 1.0).collect();
        let zero = vec![0.0; 50];
        let a = convexity_screen(&lin, true, &[20, 40]).unwrap();
        let b = convexity_screen(&zero, true, &[20, 40]).unwrap();
        for (x, y) in a.windows.iter().zip(&b.windows) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn short_input() {
        assert!(convexity_screen(&[0.0; 9], true, &[5]).is_err());
        assert!(convexity_screen(&[0.0; 20], true, &[25]).is_err());
    }
}
