//! Monomial norms `m_n = ‖z^n‖² = 2π ∫ e^{(2n+2)t − ψ(t)} dt`, Laplace points `ψ'(y_n) = 2n+2`
//! and the two-sided Laplace estimate `m_n ≍ e^{(2n+2)y_n − ψ(y_n)} ψ''(y_n)^{-1/2}`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::io::{fmt_f64, parse_f64, read_rows, write_rows};
use crate::numeric::{integrate_log, log_sum_exp};
use crate::weightlab::{classify, Family, LacunarySequence, ProbeWindow, Regime, Weight};
use crate::{Error, LogReal, QuadratureSpec, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Left end of the Laplace-point search in `t`.
pub const LAPLACE_LEFT: f64 = -700.0;
/// Right end of the Laplace-point search in `t`.
pub const LAPLACE_HORIZON: f64 = 1e15;
/// Integrand tails are cut where they fall this far (in log) below the peak.
pub const TAIL_DROP: f64 = 40.0;

/// Solve `ψ'(y_n) = 2n + 2` for `n = 0..=N` by bisection.
///
/// Leading indices whose target is already exceeded at [`LAPLACE_LEFT`] are placed one unit apart
/// below the first solvable point so the sequence stays strictly increasing.
pub fn laplace_points(w: &Weight, n_max: usize) -> Result<Vec<f64>> {
    let mut ys: Vec<Option<f64>> = Vec::with_capacity(n_max + 1);
    let mut lo = LAPLACE_LEFT;
    for n in 0..=n_max {
        let target = (2 * n + 2) as f64;
        if w.dpsi(lo) >= target {
            if ys.iter().any(Option::is_some) {
                // ψ' jumped past this target at the previous point (piecewise-constant ψ')
                ys.push(Some(lo));
                continue;
            }
            ys.push(None);
            continue;
        }
        let mut hi = lo.abs().max(1.0);
        loop {
            let d = w.dpsi(hi);
            if d.is_nan() {
                return Err(Error::Precondition(format!("psi' is not a number at t = {hi}")));
            }
            if d >= target {
                break;
            }
            hi *= 2.0;
            if hi > LAPLACE_HORIZON {
                return Err(Error::LaplaceUnreachable { failed_at: n, target, max_reachable: n.checked_sub(1) });
            }
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..400 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let d = w.dpsi(m);
            if (d - target).abs() <= 1e-10 * target {
                a = m;
                b = m;
                break;
            }
            if d < target {
                a = m;
            } else {
                b = m;
            }
        }
        let y = if (w.dpsi(a) - target).abs() <= (w.dpsi(b) - target).abs() { a } else { b };
        ys.push(Some(y));
        lo = y;
    }
    let first = ys.iter().position(Option::is_some);
    let mut out = vec![0.0; n_max + 1];
    match first {
        None => {
            // every target is below ψ' at the left end
            for (n, v) in out.iter_mut().enumerate() {
                *v = LAPLACE_LEFT - (n_max - n) as f64;
            }
        }
        Some(k0) => {
            let y0 = ys[k0].unwrap();
            for n in 0..=n_max {
                out[n] = ys[n].unwrap_or_else(|| y0 - (k0 - n) as f64);
            }
        }
    }
    // piecewise-constant ψ' can put consecutive targets on the same jump
    for n in 1..out.len() {
        if out[n] <= out[n - 1] {
            out[n] = out[n - 1].next_up();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MomentTable {
    /// `log m_n`.
    pub logm: Vec<LogReal>,
    pub y: Vec<f64>,
    /// `α_n = ψ''(y_n)`.
    pub alpha: Vec<f64>,
    /// Relative error estimate per entry (0 for closed-form entries).
    pub rel_err: Vec<f64>,
    pub weight: Option<Weight>,
    pub label: String,
}

impl MomentTable {
    /// A table of raw moments with no weight attached (Laplace data left as NaN).
    pub fn from_logm(logm: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = logm.iter().position(|v| !v.is_finite()) {
            return Err(Error::Constraint { index: i, what: "log m_n must be finite".into() });
        }
        let n = logm.len();
        Ok(MomentTable {
            logm: logm.into_iter().map(LogReal::from_log).collect(),
            y: vec![f64::NAN; n],
            alpha: vec![f64::NAN; n],
            rel_err: vec![0.0; n],
            weight: None,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.logm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logm.is_empty()
    }

    /// `log m_n` as a plain float.
    pub fn log_m(&self, n: usize) -> f64 {
        self.logm[n].logmag()
    }

    /// `min_n (log m_{n−1} + log m_{n+1} − 2 log m_n)`; non-negative up to rounding.
    pub fn log_convexity_margin(&self) -> f64 {
        (1..self.len().saturating_sub(1))
            .map(|n| self.log_m(n - 1) + self.log_m(n + 1) - 2.0 * self.log_m(n))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = (0..self.len()).map(|n| {
            vec![n.to_string(), fmt_f64(self.log_m(n)), fmt_f64(self.y[n]), fmt_f64(self.alpha[n])]
        });
        write_rows(out, &["n", "logm", "y_n", "alpha_n"], rows)
    }

    pub fn read_csv<R: Read>(input: R, label: impl Into<String>) -> Result<Self> {
        let rows = read_rows(input, &["n", "logm", "y_n", "alpha_n"])?;
        let mut tab = MomentTable::from_logm(Vec::new(), label)?;
        for (i, r) in rows.iter().enumerate() {
            let n: usize = r[0].trim().parse().map_err(|_| Error::Invalid(format!("bad index {:?}", r[0])))?;
            if n != i {
                return Err(Error::Constraint { index: i, what: format!("row index {n} out of order") });
            }
            tab.logm.push(LogReal::from_log(parse_f64(&r[1])?));
            tab.y.push(parse_f64(&r[2])?);
            tab.alpha.push(parse_f64(&r[3])?);
            tab.rel_err.push(0.0);
        }
        Ok(tab)
    }
}

/// Default integration settings: relative tolerance `1e-12` and tail search limits `(−10⁴, 10⁶)`.
pub fn default_spec() -> QuadratureSpec {
    QuadratureSpec::new((-1e4, 1e6), 1e-12).with_max_subdivisions(4000)
}

/// Exact `log ∫_a^b e^{v_a + k(t − a)} dt` (with `b = ∞` allowed for `k < 0`).
fn log_int_exp_linear(v_a: f64, k: f64, width: f64) -> f64 {
    if width.is_infinite() {
        debug_assert!(k < 0.0);
        return v_a - (-k).ln();
    }
    let kw = k * width;
    if kw.abs() < 1e-12 {
        v_a + width.ln() + 0.5 * kw
    } else if k > 0.0 {
        v_a + kw + (-(-kw).exp_m1()).ln() - k.ln()
    } else {
        v_a + (-kw.exp_m1()).ln() - (-k).ln()
    }
}

/// `log ∫ e^{c t − ψ(t)} dt` for the piecewise-linear lacunary `ψ`, segment by segment.
fn lacunary_log_integral(w: &Weight, seq: &LacunarySequence, c: f64) -> f64 {
    let l1 = seq.log_r(1);
    // below log R_1, ψ(t) = t + offset and c ≥ 2: ∫_{−∞}^{l1} e^{ct − ψ} = e^{c l1 − ψ(l1)}/(c − 1)
    let mut parts = vec![c * l1 - w.psi(l1) - (c - 1.0).ln()];
    let mut n = 1;
    loop {
        let (a, m, b) = (seq.log_r(n), seq.midpoint(n), seq.log_r(n + 1));
        let slopes = [((n + 1) * (n + 1)) as f64, (n * n + 1) as f64];
        for (&(s, e), &slope) in [(a, m), (m, b)].iter().zip(&slopes) {
            let v = c * s - w.psi(s);
            parts.push(log_int_exp_linear(v, c - slope, e - s));
        }
        let total = log_sum_exp(&parts);
        let slope_next = (n * n + 1) as f64;
        let vb = c * b - w.psi(b);
        if c < slope_next && vb - (slope_next - c).ln() < total - 60.0 {
            return total;
        }
        n += 1;
    }
}

fn tail_cut(f: &dyn Fn(f64) -> f64, peak_t: f64, level: f64, dir: f64, limit: f64, side: &'static str) -> Result<f64> {
    let mut step = 1.0f64;
    let mut inside = peak_t;
    loop {
        let t = peak_t + dir * step;
        if (dir > 0.0 && t >= limit) || (dir < 0.0 && t <= limit) {
            if f(limit) <= level {
                break;
            }
            return Err(Error::NonIntegrable { side });
        }
        if f(t) <= level {
            // bisect between the last point above the level and t
            let (mut a, mut b) = (inside, t);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if f(m) <= level {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(b);
        }
        inside = t;
        step *= 2.0;
    }
    Ok(limit)
}

fn quadrature_log_integral(w: &Weight, c: f64, peak: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let f = |t: f64| c * t - w.psi(t);
    // the Laplace point is the maximum for convex ψ; scan nearby in case it is not
    let mut peak = peak;
    if !peak.is_finite() {
        peak = 0.0;
    }
    let top = f(peak);
    let level = top - TAIL_DROP;
    let right = tail_cut(&f, peak, level, 1.0, spec.window.1, "right")?;
    let left = tail_cut(&f, peak, level, -1.0, spec.window.0, "left")?;
    let mut breaks = vec![peak];
    if let Family::LogPower { .. } = w.family() {
        breaks.push(0.0);
    }
    let local = QuadratureSpec {
        rel_tol: spec.rel_tol,
        max_subdivisions: spec.max_subdivisions,
        window: (left, right),
        breakpoints: spec.breakpoints.clone(),
    }
    .with_breakpoints(breaks);
    let res = integrate_log(|t| LogReal::from_log(f(t)), &local)?;
    Ok((res.value.logmag(), res.relative_error()))
}

/// Moment table `m_0..m_N` with Laplace data.
///
/// The integration window in `spec` bounds the tail search; each integral runs over the range
/// where the integrand is within `e^{−40}` of its peak. Lacunary weights are integrated exactly.
pub fn build_table(w: &Weight, n_max: usize, spec: &QuadratureSpec) -> Result<MomentTable> {
    let y = laplace_points(w, n_max)?;
    let alpha: Vec<f64> = y.iter().map(|&t| w.d2psi(t)).collect();
    let entries: Vec<Result<(f64, f64)>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let c = (2 * n + 2) as f64;
            match w.family() {
                Family::Lacunary(seq) => Ok((lacunary_log_integral(w, seq, c), 0.0)),
                _ => quadrature_log_integral(w, c, y[n], spec),
            }
        })
        .collect();
    let mut logm = Vec::with_capacity(n_max + 1);
    let mut rel_err = Vec::with_capacity(n_max + 1);
    for e in entries {
        let (l, r) = e?;
        logm.push(LogReal::from_log(LN_2PI + l));
        rel_err.push(r);
    }
    Ok(MomentTable { logm, y, alpha, rel_err, weight: Some(w.clone()), label: w.family_name() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplaceReport {
    /// `r_n = m_n / (e^{(2n+2)y_n − ψ(y_n)} α_n^{−1/2})`.
    pub ratios: Vec<f64>,
    /// `max r / min r` over `n ∈ [N/2, N]`.
    pub spread: f64,
    /// `(max r − min r) / mean r` over the top quartile of indices.
    pub top_oscillation: f64,
    /// Range of `(g(t) − g(0)) / (α_n t²)` over `0 < |t| ≤ α_n^{−1/2}`, all `n`.
    pub quadratic_band: (f64, f64),
    /// The same range over `0 < |t| ≤ α_n^{−2/3}`.
    pub wide_band: (f64, f64),
    pub pass: bool,
}

pub const LAPLACE_MAX_SPREAD: f64 = 20.0;
pub const LAPLACE_MAX_OSCILLATION: f64 = 0.10;

fn quadratic_band(w: &Weight, y: f64, alpha: f64, reach: f64) -> (f64, f64) {
    let d1 = w.dpsi(y);
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..=32 {
        for sgn in [-1.0, 1.0] {
            let t = sgn * reach * k as f64 / 32.0;
            let g = w.psi(y + t) - w.psi(y) - t * d1;
            let r = g / (alpha * t * t);
            band = (band.0.min(r), band.1.max(r));
        }
    }
    band
}

/// Compare each `m_n` with its Laplace approximation; only for T2-like weights.
pub fn laplace_check(tab: &MomentTable) -> Result<LaplaceReport> {
    let w = tab
        .weight
        .as_ref()
        .ok_or_else(|| Error::Precondition("moment table has no weight attached".into()))?;
    let n_max = tab.len() - 1;
    if n_max < 3 {
        return Err(Error::TableTooShort { len: tab.len(), required: 4 });
    }
    let window = ProbeWindow::new(tab.y[0], tab.y[n_max], 64.max(tab.len()).min(4096));
    let regime = classify(w, window)?;
    if regime.regime != Regime::T2Like {
        return Err(Error::Regime(format!(
            "Laplace estimate needs a T2-like weight, {} classified as {:?}",
            w.family_name(),
            regime.regime
        )));
    }
    let ratios: Vec<f64> = (0..=n_max)
        .map(|n| {
            let (y, a) = (tab.y[n], tab.alpha[n]);
            let log_den = (2 * n + 2) as f64 * y - w.psi(y) - 0.5 * a.ln();
            (tab.log_m(n) - log_den).exp()
        })
        .collect();
    let upper = &ratios[n_max / 2..];
    let (mn, mx) = upper.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let spread = mx / mn;
    let quart = &ratios[(3 * n_max) / 4..];
    let (qmn, qmx) = quart.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let mean = quart.iter().sum::<f64>() / quart.len() as f64;
    let top_oscillation = (qmx - qmn) / mean;
    let mut qb = (f64::INFINITY, f64::NEG_INFINITY);
    let mut wb = (f64::INFINITY, f64::NEG_INFINITY);
    for n in 0..=n_max {
        let (y, a) = (tab.y[n], tab.alpha[n]);
        let b1 = quadratic_band(w, y, a, a.powf(-0.5));
        let b2 = quadratic_band(w, y, a, a.powf(-2.0 / 3.0));
        qb = (qb.0.min(b1.0), qb.1.max(b1.1));
        wb = (wb.0.min(b2.0), wb.1.max(b2.1));
    }
    Ok(LaplaceReport {
        ratios,
        spread,
        top_oscillation,
        quadratic_band: qb,
        wide_band: wb,
        pass: spread <= LAPLACE_MAX_SPREAD && top_oscillation <= LAPLACE_MAX_OSCILLATION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn laplace_points_closed_forms() {
        let sq = Weight::custom("t^2", |t| t * t);
        let ys = laplace_points(&sq, 20).unwrap();
        for (n, y) in ys.iter().enumerate() {
            assert!((y - (n + 1) as f64).abs() < 1e-8, "n = {n}: {y}");
        }
        let w = Weight::log_power(1.5).unwrap();
        let ys = laplace_points(&w, 5).unwrap();
        assert!((ys[0] - 16.0 / 9.0).abs() < 1e-9);
        for (n, &y) in ys.iter().enumerate() {
            assert!((w.dpsi(y) - (2 * n + 2) as f64).abs() <= 1e-10 * (2 * n + 2) as f64);
        }
    }

    #[test]
    fn laplace_points_unreachable() {
        let w = Weight::custom("5 softplus", |t: f64| 5.0 * (t.max(0.0) + (-t.abs()).exp().ln_1p()));
        match laplace_points(&w, 3) {
            Err(Error::LaplaceUnreachable { failed_at, max_reachable, .. }) => {
                assert_eq!(failed_at, 2);
                assert_eq!(max_reachable, Some(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn leading_indices_filled_increasing() {
        // ψ' ≥ 7 everywhere, so n = 0, 1, 2 have no solution
        let w = Weight::custom("7t + t^2", |t| 7.0 * t + t * t);
        let ys = laplace_points(&w, 6).unwrap();
        assert!(ys.windows(2).all(|p| p[1] > p[0]));
        assert!((ys[3] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn gaussian_moments() {
        let w = Weight::power(2.0).unwrap();
        let tab = build_table(&w, 30, &default_spec()).unwrap();
        for n in 0..=30 {
            let oracle = std::f64::consts::PI.ln() + ln_gamma((n + 1) as f64);
            assert!((tab.log_m(n) - oracle).abs() < 1e-10, "n = {n}");
        }
        assert!((tab.logm[2].value() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!(tab.log_convexity_margin() >= -1e-9);
    }

    #[test]
    fn truncated_square_m0() {
        let w = Weight::log_power(2.0).unwrap();
        let tab = build_table(&w, 3, &default_spec()).unwrap();
        let pi = std::f64::consts::PI;
        let oracle = 2.0 * pi * (0.5 + std::f64::consts::E * pi.sqrt() / 2.0 * (1.0 + erf(1.0)));
        assert!((tab.logm[0].value() / oracle - 1.0).abs() < 1e-10);
        assert!((oracle - 31.03).abs() < 0.01);
    }

    #[test]
    fn shift_lowers_log_moments_by_one() {
        let w = Weight::log_power(1.5).unwrap();
        let a = build_table(&w, 12, &default_spec()).unwrap();
        let b = build_table(&w.shifted(1.0), 12, &default_spec()).unwrap();
        for n in 0..=12 {
            assert!((a.log_m(n) - b.log_m(n) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tighter_tolerance_is_stable() {
        let w = Weight::log_power(1.5).unwrap();
        let coarse = build_table(&w, 20, &QuadratureSpec::new((-1e4, 1e6), 1e-9)).unwrap();
        let fine = build_table(&w, 20, &default_spec()).unwrap();
        for n in 0..=20 {
            assert!((coarse.log_m(n) - fine.log_m(n)).abs() < 1e-8);
        }
    }

    #[test]
    fn lacunary_exact_against_quadrature() {
        let seq = LacunarySequence::squaring(6);
        let w = Weight::theorem3(seq.clone());
        let exact = build_table(&w, 15, &default_spec()).unwrap();
        let smooth = Weight::custom("lacunary", move |t| seq.psi(t));
        let corners = w.lacunary().unwrap().corners(200.0);
        for n in [0usize, 3, 9, 15] {
            let c = (2 * n + 2) as f64;
            let spec = QuadratureSpec::new((-60.0, 400.0), 1e-12).with_breakpoints(corners.clone());
            let q = integrate_log(|t| LogReal::from_log(c * t - smooth.psi(t)), &spec).unwrap();
            assert!((exact.log_m(n) - LN_2PI - q.value.logmag()).abs() < 1e-10, "n = {n}");
        }
        assert!(exact.log_convexity_margin() >= -1e-9);
    }

    #[test]
    fn non_integrable_side_reported() {
        let w = Weight::custom("linear", |t| 0.5 * t);
        assert!(matches!(
            build_table(&w, 0, &default_spec()),
            Err(Error::LaplaceUnreachable { .. })
        ));
        let w = Weight::custom("flat then steep", |t: f64| if t < 0.0 { 3.0 * t } else { t * t });
        assert!(matches!(build_table(&w, 1, &default_spec()), Err(Error::NonIntegrable { side: "left" })));
    }

    #[test]
    fn laplace_ratio_limit_for_square() {
        let w = Weight::custom("t^2", |t| t * t);
        let tab = build_table(&w, 40, &default_spec()).unwrap();
        let rep = laplace_check(&tab).unwrap();
        let limit = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI).sqrt();
        assert!((rep.ratios[40] / limit - 1.0).abs() < 1e-6);
        assert!(rep.pass);
        assert!(rep.quadratic_band.0 >= 0.25 && rep.quadratic_band.1 <= 4.0);
    }

    #[test]
    fn laplace_refuses_t1() {
        let w = Weight::power(2.0).unwrap();
        let tab = build_table(&w, 10, &default_spec()).unwrap();
        assert!(matches!(laplace_check(&tab), Err(Error::Regime(_))));
    }

    #[test]
    fn csv_round_trip() {
        let w = Weight::log_power(1.5).unwrap();
        let tab = build_table(&w, 5, &default_spec()).unwrap();
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        let back = MomentTable::read_csv(buf.as_slice(), "x").unwrap();
        for n in 0..=5 {
            assert_eq!(back.log_m(n), tab.log_m(n));
            assert_eq!(back.y[n], tab.y[n]);
        }
    }
}
