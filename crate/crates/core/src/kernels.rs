//! Reproducing kernels through the moment table, `K(z, w) = Σ_n (z w̄)^n / m_n`, point sets and
//! their separation and density constants, and the kernel-norm asymptotics diagnostics.

use std::collections::HashSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::io::{fmt_f64, parse_f64, read_rows, write_rows};
use crate::moments::MomentTable;
use crate::numeric::{log_sum, log_sum_complex, wrap_phase};
use crate::weightlab::{classify, Family, ProbeWindow, Regime, Weight};
use crate::{Complex, Error, LogComplex, LogReal, Result};

/// A point `λ = e^{logr + iθ}`; the origin has `logr = −∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub logr: f64,
    pub theta: f64,
}

impl Point {
    pub fn new(logr: f64, theta: f64) -> Self {
        Point { logr, theta: wrap_phase(theta) }
    }

    pub fn origin() -> Self {
        Point { logr: f64::NEG_INFINITY, theta: 0.0 }
    }

    pub fn from_complex(z: Complex) -> Self {
        if z.norm() == 0.0 {
            Self::origin()
        } else {
            Self::new(z.norm().ln(), z.arg())
        }
    }

    pub fn is_origin(&self) -> bool {
        self.logr == f64::NEG_INFINITY
    }

    pub fn radius(&self) -> f64 {
        self.logr.exp()
    }

    pub fn to_complex(&self) -> Complex {
        Complex::from_polar(self.radius(), self.theta)
    }

    /// `|z − w|`, scaled by the larger radius and with the radial difference taken through
    /// `expm1`, so nearby points on a huge circle keep their relative accuracy.
    pub fn distance(&self, other: &Point) -> f64 {
        match (self.is_origin(), other.is_origin()) {
            (true, true) => return 0.0,
            (true, false) => return other.radius(),
            (false, true) => return self.radius(),
            _ => {}
        }
        let (hi, lo) = if self.logr >= other.logr { (self.logr, other.logr) } else { (other.logr, self.logr) };
        let dr = (lo - hi).exp_m1();
        let chord = 2.0 * (0.5 * (self.theta - other.theta)).sin() * (0.5 * (lo - hi)).exp();
        hi.exp() * dr.hypot(chord)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub label: String,
    /// `(R, A)` of the annulus the set was built for, when known.
    pub annulus: Option<(f64, f64)>,
}

const DUPLICATE_RESOLUTION: f64 = 1e-12;

impl PointSet {
    pub fn new(points: Vec<Point>, label: impl Into<String>) -> Result<Self> {
        let key = |p: &Point| {
            if p.is_origin() {
                (i64::MIN, 0)
            } else {
                ((p.logr / DUPLICATE_RESOLUTION).round() as i64, (p.theta / DUPLICATE_RESOLUTION).round() as i64)
            }
        };
        let mut seen = HashSet::new();
        for (i, p) in points.iter().enumerate() {
            if !(p.logr.is_finite() || p.is_origin()) || !p.theta.is_finite() {
                return Err(Error::Constraint { index: i, what: "point coordinates must be finite".into() });
            }
            if !seen.insert(key(p)) {
                return Err(Error::Constraint { index: i, what: "duplicate point".into() });
            }
        }
        Ok(PointSet { points, label: label.into(), annulus: None })
    }

    pub fn with_annulus(mut self, r: f64, a: f64) -> Self {
        self.annulus = Some((r, a));
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.points.iter().map(|p| vec![fmt_f64(p.logr), fmt_f64(p.theta)]);
        write_rows(out, &["logr", "theta"], rows)
    }

    pub fn read_csv<R: Read>(input: R, label: impl Into<String>) -> Result<Self> {
        let rows = read_rows(input, &["logr", "theta"])?;
        let pts = rows
            .iter()
            .map(|r| Ok(Point { logr: parse_f64(&r[0])?, theta: parse_f64(&r[1])? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, label)
    }
}

/// Series data for `‖k_λ‖² = Σ_n |λ|^{2n} / m_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelStats {
    pub lognorm2: LogReal,
    /// Last index included in the sum.
    pub truncation: usize,
    pub peak: usize,
    /// Bound on the neglected tail relative to the sum.
    pub tail_bound: f64,
}

/// Terms must stay below this fraction of the peak for [`DECAY_RUN`] indices.
const DECAY_LOG: f64 = -27.631_021_115_928_547; // ln 1e-12
const DECAY_RUN: usize = 10;
pub const TRUNCATION_TOL: f64 = 1e-9;

pub fn kernel_norm2(tab: &MomentTable, logr: f64) -> Result<KernelStats> {
    if tab.is_empty() {
        return Err(Error::TableTooShort { len: 0, required: 1 });
    }
    if logr == f64::NEG_INFINITY {
        return Ok(KernelStats { lognorm2: tab.logm[0].recip(), truncation: 0, peak: 0, tail_bound: 0.0 });
    }
    let t = |n: usize| 2.0 * n as f64 * logr - tab.log_m(n);
    let mut peak = 0;
    let mut top = t(0);
    let mut run = 0;
    let mut end = None;
    for n in 1..tab.len() {
        let v = t(n);
        if v > top {
            top = v;
            peak = n;
            run = 0;
            continue;
        }
        if v < top + DECAY_LOG && v < t(n - 1) {
            run += 1;
            if run >= DECAY_RUN {
                end = Some(n);
                break;
            }
        } else {
            run = 0;
        }
    }
    let len = tab.len();
    let Some(end) = end else {
        let last = len - 1;
        let required = if len >= 2 && t(last) < t(last - 1) {
            let d = t(last - 1) - t(last);
            last + ((t(last) - (top + DECAY_LOG)).max(0.0) / d).ceil() as usize + DECAY_RUN + 1
        } else {
            2 * len + DECAY_RUN
        };
        return Err(Error::TableTooShort { len, required });
    };
    let terms: Vec<LogReal> = (0..=end).map(|n| LogReal::from_log(t(n))).collect();
    let sum = log_sum(&terms).value;
    // geometric tail beyond `end` with the last ratio; later ratios are smaller by log-convexity
    let q = t(end) - t(end - 1);
    let tail_bound = (t(end) + q - (-q.exp_m1()).ln() - sum.logmag()).exp();
    if tail_bound > TRUNCATION_TOL {
        return Err(Error::TableTooShort { len, required: 2 * len });
    }
    Ok(KernelStats { lognorm2: sum, truncation: end, peak, tail_bound })
}

/// `⟨k_q, k_p⟩ / (‖k_p‖ ‖k_q‖) = Σ_n (conj(λ_p) λ_q)^n / m_n`, normalised.
///
/// The sum is always evaluated with the points in a canonical order and conjugated otherwise,
/// so `entry(p, q) = conj(entry(q, p))` holds exactly.
pub fn normalized_gram_entry(tab: &MomentTable, p: &Point, q: &Point) -> Result<Complex> {
    let kp = kernel_norm2(tab, p.logr)?;
    let kq = kernel_norm2(tab, q.logr)?;
    Ok(gram_entry_with_norms(tab, p, q, &kp, &kq))
}

/// [`normalized_gram_entry`] with precomputed kernel statistics.
pub fn gram_entry_with_norms(tab: &MomentTable, p: &Point, q: &Point, kp: &KernelStats, kq: &KernelStats) -> Complex {
    if p == q {
        return Complex::new(1.0, 0.0);
    }
    let swap = (q.logr, q.theta) < (p.logr, p.theta);
    let (a, b, ka, kb) = if swap { (q, p, kq, kp) } else { (p, q, kp, kq) };
    let norm = 0.5 * (ka.lognorm2.logmag() + kb.lognorm2.logmag());
    let z = if a.is_origin() || b.is_origin() {
        Complex::new((-tab.log_m(0) - norm).exp(), 0.0)
    } else {
        let d = ka.truncation.max(kb.truncation);
        let s = a.logr + b.logr;
        let dphi = b.theta - a.theta;
        let terms: Vec<LogComplex> = (0..=d)
            .map(|n| LogComplex::from_polar_log(n as f64 * s - tab.log_m(n) - norm, n as f64 * dphi))
            .collect();
        log_sum_complex(&terms).value.to_complex()
    };
    if swap {
        z.conj()
    } else {
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    /// Minimal distance from a point in `Ω_{R,A/4}` to the rest of the set, over `ρ(R)`.
    pub beta_sep: f64,
    pub sep_witness: Option<(usize, usize)>,
    /// `ρ(R)` over the covering radius of `Ω_{R,A/4}`.
    pub beta_den: f64,
    pub cover_radius: f64,
    /// Grid point realising the covering radius.
    pub den_witness: Option<Point>,
    pub points_in_annulus: usize,
    pub grid_points: usize,
}

/// Nearest-point queries on a set sorted by radius; the scan stops once the radial gap alone
/// exceeds the best distance found.
struct RadialIndex<'a> {
    points: &'a [Point],
    order: Vec<usize>,
    radii: Vec<f64>,
}

impl<'a> RadialIndex<'a> {
    fn new(points: &'a [Point]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| points[i].logr.total_cmp(&points[j].logr));
        let radii = order.iter().map(|&i| points[i].radius()).collect();
        RadialIndex { points, order, radii }
    }

    fn nearest(&self, z: &Point, skip: Option<usize>) -> Option<(usize, f64)> {
        let r = z.radius();
        let start = self.radii.partition_point(|&x| x < r);
        let mut best: Option<(usize, f64)> = None;
        let (mut lo, mut hi) = (start, start);
        loop {
            let bound = best.map_or(f64::INFINITY, |b| b.1);
            let down = (lo > 0).then(|| r - self.radii[lo - 1]).filter(|&g| g <= bound);
            let up = (hi < self.radii.len()).then(|| self.radii[hi] - r).filter(|&g| g <= bound);
            let pos = match (down, up) {
                (None, None) => break,
                (Some(d), Some(u)) if d <= u => {
                    lo -= 1;
                    lo
                }
                (Some(_), None) => {
                    lo -= 1;
                    lo
                }
                _ => {
                    hi += 1;
                    hi - 1
                }
            };
            let idx = self.order[pos];
            if Some(idx) == skip {
                continue;
            }
            let d = z.distance(&self.points[idx]);
            if best.is_none_or(|b| d < b.1) {
                best = Some((idx, d));
            }
        }
        best
    }
}

/// Separation and density constants of `ps` on `Ω_{R,A/4} = {||z| − R| ≤ (A/4) ρ(R)}`.
pub fn separation_density(ps: &PointSet, rho_at_r: f64, annulus: (f64, f64)) -> Result<SeparationReport> {
    let (big_r, a) = annulus;
    if !(big_r > 0.0 && a > 0.0 && rho_at_r > 0.0) {
        return Err(Error::Precondition(format!("degenerate annulus R = {big_r}, A = {a}, rho = {rho_at_r}")));
    }
    let half = 0.25 * a * rho_at_r;
    let index = RadialIndex::new(&ps.points);
    let inside: Vec<usize> = (0..ps.len()).filter(|&i| (ps.points[i].radius() - big_r).abs() <= half).collect();
    let mut report = SeparationReport {
        beta_sep: f64::INFINITY,
        sep_witness: None,
        beta_den: 0.0,
        cover_radius: f64::INFINITY,
        den_witness: None,
        points_in_annulus: inside.len(),
        grid_points: 0,
    };
    if inside.is_empty() {
        return Ok(report);
    }
    let seps: Vec<(usize, Option<(usize, f64)>)> =
        inside.par_iter().map(|&i| (i, index.nearest(&ps.points[i], Some(i)))).collect();
    for (i, nn) in seps {
        if let Some((j, d)) = nn {
            if d / rho_at_r < report.beta_sep {
                report.beta_sep = d / rho_at_r;
                report.sep_witness = Some((i, j));
            }
        }
    }
    let step = rho_at_r / 8.0;
    let radial = ((2.0 * half / step).ceil() as usize).max(1);
    let angular = ((2.0 * std::f64::consts::PI * big_r / step).ceil() as usize).max(8);
    let grid: Vec<Point> = (0..=radial)
        .flat_map(|i| {
            let r = big_r - half + 2.0 * half * i as f64 / radial as f64;
            (0..angular).filter_map(move |j| {
                (r > 0.0).then(|| Point::new(r.ln(), -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / angular as f64))
            })
        })
        .collect();
    report.grid_points = grid.len();
    let worst = grid
        .par_iter()
        .map(|z| (index.nearest(z, None).map_or(f64::INFINITY, |b| b.1), *z))
        .reduce(|| (f64::NEG_INFINITY, Point::origin()), |x, y| if y.0 > x.0 { y } else { x });
    report.cover_radius = worst.0;
    report.den_witness = Some(worst.1);
    report.beta_den = rho_at_r / worst.0;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DiagnosticMode {
    /// `‖k_z‖ e^{−h(z)/2} ρ(R)` for `||z| − R| ≤ (A/3) ρ(R)`; T1 weights.
    L5 { r: f64, a: f64 },
    /// `‖k_{λ_n}‖² / (e^{ψ(y_n) − 2y_n} ψ''(y_n)^{1/2})` with `λ_n = e^{y_n}`; T2 weights.
    L2q { n_lo: usize, n_hi: usize },
    /// `‖k_λ‖ / (e^{h(R_n)/2} n / R_n)` at `|λ| = R_n`; lacunary weights.
    Exy { n_lo: usize, n_hi: usize },
}

pub const DEFAULT_SPREAD_THRESHOLD: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticOptions {
    pub samples: usize,
    pub spread_threshold: f64,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions { samples: 16, spread_threshold: DEFAULT_SPREAD_THRESHOLD }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub mode: DiagnosticMode,
    /// Radius (`L5`) or index (`L2q`, `Exy`) of each sample.
    pub abscissae: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max / min` of the ratios.
    pub spread: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn spaced_indices(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let span = hi - lo;
    let count = count.clamp(1, span + 1);
    if count == 1 {
        return vec![lo];
    }
    let mut out: Vec<usize> = (0..count).map(|k| lo + (k * span + (count - 1) / 2) / (count - 1)).collect();
    out.dedup();
    out
}

fn require_regime(w: &Weight, lo: f64, hi: f64, want: Regime) -> Result<()> {
    let rep = classify(w, ProbeWindow::new(lo, hi, 64))?;
    if rep.regime != want {
        return Err(Error::Regime(format!("{} is {:?} on [{lo}, {hi}], mode needs {want:?}", w.family_name(), rep.regime)));
    }
    Ok(())
}

pub fn kernel_norm_diagnostics(
    tab: &MomentTable,
    w: &Weight,
    mode: DiagnosticMode,
    opts: DiagnosticOptions,
) -> Result<DiagnosticReport> {
    let mut abscissae = Vec::new();
    let mut log_ratios = Vec::new();
    match mode {
        DiagnosticMode::L5 { r, a } => {
            if let Family::Lacunary(_) = w.family() {
                return Err(Error::FamilyMismatch { family: w.family_name(), what: "Lemma-5 diagnostic".into() });
            }
            let lr = r.ln();
            require_regime(w, lr - 1.0, lr + 1.0, Regime::T1Like)?;
            let rho = w.rho(r)?.ok_or_else(|| Error::Precondition("Laplacian of h is not positive at R".into()))?;
            let half = a / 3.0 * rho;
            let m = opts.samples.max(2);
            for k in 0..m {
                let x = r - half + 2.0 * half * k as f64 / (m - 1) as f64;
                if x <= 0.0 {
                    continue;
                }
                let st = kernel_norm2(tab, x.ln())?;
                abscissae.push(x);
                log_ratios.push(0.5 * st.lognorm2.logmag() - 0.5 * w.h(x) + rho.ln());
            }
        }
        DiagnosticMode::L2q { n_lo, n_hi } => {
            if n_hi < n_lo || n_hi >= tab.len() {
                return Err(Error::Invalid(format!("index range {n_lo}..={n_hi} outside the table")));
            }
            if let Family::Lacunary(_) = w.family() {
                return Err(Error::FamilyMismatch { family: w.family_name(), what: "Lemma-2q diagnostic".into() });
            }
            require_regime(w, tab.y[n_lo], tab.y[n_hi].max(tab.y[n_lo] + 1.0), Regime::T2Like)?;
            for n in spaced_indices(n_lo, n_hi, opts.samples) {
                let y = tab.y[n];
                let st = kernel_norm2(tab, y)?;
                abscissae.push(n as f64);
                log_ratios.push(st.lognorm2.logmag() - (w.psi(y) - 2.0 * y + 0.5 * tab.alpha[n].ln()));
            }
        }
        DiagnosticMode::Exy { n_lo, n_hi } => {
            let Family::Lacunary(seq) = w.family() else {
                return Err(Error::Regime(format!("{} is not a lacunary weight", w.family_name())));
            };
            if n_lo == 0 || n_hi < n_lo {
                return Err(Error::Invalid(format!("index range {n_lo}..={n_hi} must start at 1")));
            }
            for n in spaced_indices(n_lo, n_hi, opts.samples) {
                let lr = seq.log_r(n);
                let st = kernel_norm2(tab, lr)?;
                abscissae.push(n as f64);
                log_ratios.push(0.5 * st.lognorm2.logmag() - (0.5 * w.psi(lr) + (n as f64).ln() - lr));
            }
        }
    }
    if log_ratios.is_empty() {
        return Err(Error::Invalid("no admissible samples".into()));
    }
    let (lo, hi) = log_ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = (hi - lo).exp();
    Ok(DiagnosticReport {
        mode,
        abscissae,
        ratios: log_ratios.iter().map(|v| v.exp()).collect(),
        spread,
        threshold: opts.spread_threshold,
        pass: spread <= opts.spread_threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub s: Vec<f64>,
    pub omega: Vec<f64>,
    /// Smallest second difference of `ω` on the grid.
    pub min_second_difference: f64,
    pub scale: f64,
    pub convex: bool,
}

/// `ω(s) = log F(e^s)` with `F(t)² = ∫_0^{2π} |f(te^{iθ})|² dθ = 2π Σ |c_k|² t^{2k}`, sampled on
/// `samples` points of `[s_lo, s_hi]`.
pub fn radial_log_means(coeffs: &[LogComplex], s_lo: f64, s_hi: f64, samples: usize) -> Result<ConvexityReport> {
    if coeffs.iter().all(LogComplex::is_zero) {
        return Err(Error::Invalid("zero polynomial".into()));
    }
    if samples < 3 || !(s_hi > s_lo) {
        return Err(Error::Invalid("need at least three samples on a non-empty interval".into()));
    }
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let s: Vec<f64> = (0..samples).map(|k| s_lo + (s_hi - s_lo) * k as f64 / (samples - 1) as f64).collect();
    let omega: Vec<f64> = s
        .iter()
        .map(|&x| {
            let terms: Vec<LogReal> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| LogReal::from_log(2.0 * c.logmag() + 2.0 * k as f64 * x))
                .collect();
            0.5 * (ln2pi + log_sum(&terms).value.logmag())
        })
        .collect();
    let scale = omega.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let min_second_difference = omega
        .windows(3)
        .map(|w| w[0] + w[2] - 2.0 * w[1])
        .fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport { s, omega, min_second_difference, scale, convex: min_second_difference >= -1e-8 * scale })
}
