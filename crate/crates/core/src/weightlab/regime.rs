use serde::Serialize;

use super::Weight;
use crate::{Error, Result};

/// Sampling window in the `t = log r` coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeWindow {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl ProbeWindow {
    pub fn new(start: f64, end: f64, samples: usize) -> Self {
        ProbeWindow { start, end, samples }
    }

    fn grid(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.start + step * k as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `ψ''` positive and increasing without bound.
    T1Like,
    /// `ψ''` positive, non-increasing, with `|ψ'''| = O(ψ''^{5/3})`.
    T2Like,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub samples: usize,
    pub positive: bool,
    pub d2_non_decreasing: bool,
    pub d2_non_increasing: bool,
    /// `ψ''(end) / ψ''(start)`.
    pub d2_growth: f64,
    pub dpsi_start: f64,
    pub dpsi_end: f64,
    pub dpsi_grows: bool,
    /// `sup |ψ'''| / ψ''^{5/3}` over the samples where `ψ'' > 0`.
    pub sup_d3_ratio: f64,
    /// Sample locations that decided the label (or broke the other labels).
    pub witnesses: Vec<(f64, String)>,
}

/// Relative slack used when comparing sampled second derivatives.
const MONO_TOL: f64 = 1e-6;
/// `ψ''` must at least double across the window to count as growing.
const T1_GROWTH: f64 = 2.0;
const T2_RATIO_CAP: f64 = 1e6;

/// Label the weight as T1-like, T2-like or neither from samples on `window`.
pub fn classify(w: &Weight, window: ProbeWindow) -> Result<RegimeReport> {
    if window.samples < 10 {
        return Err(Error::Invalid(format!("probe window has {} samples, need at least 10", window.samples)));
    }
    if !(window.end > window.start) {
        return Err(Error::Invalid("probe window is empty".into()));
    }
    let ts = window.grid();
    let d2: Vec<f64> = ts.iter().map(|&t| w.d2psi(t)).collect();
    let d3: Vec<f64> = ts.iter().map(|&t| w.d3psi(t)).collect();
    let mut witnesses = Vec::new();

    let positive = match d2.iter().position(|&v| !(v > 0.0)) {
        Some(i) => {
            witnesses.push((ts[i], format!("psi'' = {:e} is not positive", d2[i])));
            false
        }
        None => true,
    };
    let mut non_decreasing = true;
    let mut non_increasing = true;
    for i in 1..ts.len() {
        let tol = MONO_TOL * d2[i].abs().max(d2[i - 1].abs()) + 1e-300;
        if d2[i] < d2[i - 1] - tol && non_decreasing {
            non_decreasing = false;
            witnesses.push((ts[i], "psi'' decreases".into()));
        }
        if d2[i] > d2[i - 1] + tol && non_increasing {
            non_increasing = false;
            witnesses.push((ts[i], "psi'' increases".into()));
        }
    }
    let d2_growth = d2[d2.len() - 1] / d2[0];
    let dpsi_start = w.dpsi(window.start);
    let dpsi_end = w.dpsi(window.end);
    let dpsi_grows = dpsi_end > dpsi_start * (1.0 + MONO_TOL) + 1e-12;

    let mut sup_d3_ratio = 0.0f64;
    let mut sup_at = window.start;
    for i in 0..ts.len() {
        if d2[i] > 0.0 {
            let r = d3[i].abs() / d2[i].powf(5.0 / 3.0);
            if r > sup_d3_ratio {
                sup_d3_ratio = r;
                sup_at = ts[i];
            }
        }
    }

    let regime = if positive && non_decreasing && d2_growth >= T1_GROWTH && dpsi_grows {
        witnesses.push((window.end, format!("psi'' grew by a factor {d2_growth:.3e}")));
        Regime::T1Like
    } else if positive && non_increasing && sup_d3_ratio.is_finite() && sup_d3_ratio <= T2_RATIO_CAP {
        witnesses.push((sup_at, format!("sup |psi'''|/psi''^(5/3) = {sup_d3_ratio:.6e}")));
        Regime::T2Like
    } else {
        Regime::Neither
    };
    Ok(RegimeReport {
        regime,
        samples: ts.len(),
        positive,
        d2_non_decreasing: non_decreasing,
        d2_non_increasing: non_increasing,
        d2_growth,
        dpsi_start,
        dpsi_end,
        dpsi_grows,
        sup_d3_ratio,
        witnesses,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatPoint {
    pub y: f64,
    pub tau: f64,
    /// `max |ψ''(x)/ψ''(y) − 1|` over `|x − y| ≤ Aτ(y)`, sampled at step `τ(y)/16`.
    pub max_deviation: f64,
    pub steps: usize,
}

const MAX_FLAT_STEPS: usize = 50_000_000;

fn window_deviation(w: &Weight, a: f64, y: f64, tau: f64, d2y: f64) -> Result<f64> {
    let half = (16.0 * a).ceil() as i64;
    let mut worst = 0.0f64;
    for k in -half..=half {
        let x = y + (k as f64 / 16.0) * tau;
        let x = x.clamp(y - a * tau, y + a * tau);
        let v = w.d2psi(x);
        if !(v > 0.0) {
            return Err(Error::Precondition(format!("psi'' = {v:e} is not positive at t = {x}")));
        }
        worst = worst.max((v / d2y - 1.0).abs());
    }
    Ok(worst)
}

/// First `y ≥ y0` (scanning with step `τ(y)/4`) where `|ψ''(x)/ψ''(y) − 1| ≤ 1/A` holds on
/// `|x − y| ≤ Aτ(y)`.
pub fn find_flat_point(w: &Weight, a: f64, y0: f64, horizon: f64) -> Result<FlatPoint> {
    if !(a > 0.0) {
        return Err(Error::Invalid(format!("flatness parameter A = {a} must be positive")));
    }
    let mut y = y0;
    for steps in 0..MAX_FLAT_STEPS {
        if y > y0 + horizon {
            break;
        }
        let tau = w
            .tau(y)?
            .ok_or_else(|| Error::Precondition(format!("psi'' is not positive at t = {y}")))?;
        let dev = window_deviation(w, a, y, tau, w.d2psi(y))?;
        if dev <= 1.0 / a {
            return Ok(FlatPoint { y, tau, max_deviation: dev, steps });
        }
        y += 0.25 * tau;
    }
    Err(Error::NoFlatPoint { start: y0, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_regimes() {
        let win = ProbeWindow::new(1.0, 6.0, 64);
        let exp = Weight::power(2.0).unwrap();
        assert_eq!(classify(&exp, win).unwrap().regime, Regime::T1Like);
        let sq = Weight::custom("t^2", |t| t * t);
        let rep = classify(&sq, win).unwrap();
        assert_eq!(rep.regime, Regime::T2Like);
        assert!(rep.sup_d3_ratio < 1e-2);
        let lac = Weight::theorem3(super::super::LacunarySequence::squaring(4));
        assert_eq!(classify(&lac, win).unwrap().regime, Regime::Neither);
    }

    #[test]
    fn three_halves_ratio() {
        let w = Weight::log_power(1.5).unwrap();
        let rep = classify(&w, ProbeWindow::new(1.0, 50.0, 200)).unwrap();
        assert_eq!(rep.regime, Regime::T2Like);
        // (3/8) t^{-3/2} / ((3/4) t^{-1/2})^{5/3} is decreasing, so the sup sits at t = 1
        let oracle = 0.375 / 0.75f64.powf(5.0 / 3.0);
        assert!((rep.sup_d3_ratio - oracle).abs() < 1e-12);
    }

    #[test]
    fn small_window_rejected() {
        let w = Weight::power(1.0).unwrap();
        assert!(classify(&w, ProbeWindow::new(0.0, 1.0, 9)).is_err());
    }

    #[test]
    fn flat_point_quadratic() {
        let w = Weight::custom("t^2", |t| t * t);
        let fp = find_flat_point(&w, 10.0, 1.0, 100.0).unwrap();
        assert_eq!(fp.y, 1.0);
    }

    #[test]
    fn flat_point_exponential_against_scan() {
        let w = Weight::power(2.0).unwrap();
        let fp = find_flat_point(&w, 5.0, 0.0, 50.0).unwrap();
        // ψ''(x)/ψ''(y) = e^{2(x−y)}; flat once e^{2Aτ} − 1 ≤ 1/A with τ = e^{−y}/2
        let threshold = -(2.0 * (1.2f64).ln() / 10.0).ln();
        assert!(fp.y >= threshold - 1e-9 && fp.y <= threshold + 0.25 * fp.tau + 1e-9);
        // re-verify on a finer grid
        for k in -1280..=1280 {
            let x = fp.y + k as f64 / 256.0 * fp.tau;
            assert!((w.d2psi(x) / w.d2psi(fp.y) - 1.0).abs() <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn flat_point_errors() {
        let w = Weight::log_power(1.5).unwrap();
        assert!(matches!(find_flat_point(&w, 5.0, -3.0, 10.0), Err(Error::Precondition(_))));
        let lac = Weight::theorem3(super::super::LacunarySequence::squaring(3));
        assert!(matches!(find_flat_point(&lac, 5.0, 1.0, 10.0), Err(Error::FamilyMismatch { .. })));
        let w = Weight::custom("cosh", |t: f64| (4.0 * t).exp() + (-4.0 * t).exp());
        assert!(matches!(find_flat_point(&w, 50.0, 0.5, 0.01), Err(Error::NoFlatPoint { .. })));
    }
}
