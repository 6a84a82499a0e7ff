//! The estimate chain for slowly growing weights: integrals of `e^{ℓ − ψ}` against the Laplace
//! points, the product `E(z) = ∏ (1 − z/e^{y_n})`, and the three Carleson-type products.

use rayon::prelude::*;
use serde::Serialize;

use crate::genfun::GenFun;
use crate::kernels::{Point, PointSet};
use crate::moments::{build_table, default_spec, laplace_points};
use crate::numeric::{integrate_log, log_sum_exp, LogReal, QuadratureSpec};
use crate::rieszlab::{assemble_kernel_gram, nested_riesz, RieszReport};
use crate::weightlab::{classify, companion_ell, CompanionEll, ProbeWindow, Regime, Weight};
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.1;
/// Laplace points beyond `N` used to truncate `E` and the tail sums.
pub const EXTRA_POINTS: usize = 20;
pub const ES2_MAX_SPREAD: f64 = 50.0;
/// `(d)` and `(e)` partial sums must lie in `[1, SUM_RATIO_MAX]` from this index on.
pub const SUM_RATIO_FROM: usize = 5;
pub const SUM_RATIO_MAX: f64 = 4.0;
/// Allowed growth of a recorded constant when the range doubles.
pub const CONSTANT_DRIFT: f64 = 0.2;
const QUAD_TOL: f64 = 1e-10;
const ENVELOPE_SAMPLES: usize = 32;

/// Per-index values for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRow {
    pub n: usize,
    pub y: f64,
    pub alpha: f64,
    /// `log v_n = ψ(y_n) − ℓ(y_n) + ½ log ψ''(y_n)`.
    pub log_v: f64,
    /// `∫_{y_n−δ}^∞ e^{ℓ−ψ} / (e^{ℓ(y_n)−ψ(y_n)} α_n^{−1/2})`.
    pub b: f64,
    /// `∫_0^{y_n−δ} e^{ℓ−ψ+2t} / (e^{ℓ(y_n)−ψ(y_n)+2y_n} α_n^{−1/2})`.
    pub c: f64,
    /// `Σ_{s≤n} v_s / v_n`.
    pub d: f64,
    /// `Σ_{s≥n} v_s e^{−2y_s} / (v_n e^{−2y_n})`.
    pub e: f64,
    /// `|E'(λ_n)|² e^{2y_n − ℓ(y_n)}`.
    pub es2: f64,
    pub et1: f64,
    pub et2: f64,
    pub et3: f64,
    /// `log ∫_0^{y_n−δ} e^{ℓ−ψ+2t} dt`, the radial mass of `dμ` inside `|z| < e^{y_n−δ}`.
    pub log_mass: f64,
}

/// `max` of a product over `n ≤ N` against `n ≤ N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub full: f64,
    pub half: f64,
    pub stable: bool,
}

impl Constant {
    fn of(vals: &[f64]) -> Self {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let (full, half) = (max(vals), max(&vals[..vals.len() / 2 + 1]));
        Constant { full, half, stable: full.is_finite() && full <= (1.0 + CONSTANT_DRIFT) * half }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T2ChainReport {
    pub n: usize,
    pub delta: f64,
    pub rows: Vec<ChainRow>,
    /// `log ∫_0^∞ e^{ℓ−ψ}`.
    pub log_a: f64,
    pub es2_spread: f64,
    /// Range of `|E(e^t)|² e^{−ℓ(t)}` over `t ∈ [y_0, y_N]` at distance `≥ δ` from every `y_n`.
    pub envelope: (f64, f64),
    /// `sup |E(e^t)|² e^{−ℓ(t)}` over the same range without the distance condition.
    pub envelope_upper: f64,
    pub et1: Constant,
    pub et2: Constant,
    pub et3: Constant,
    pub sums_in_range: bool,
    pub mass_increasing: bool,
    pub pass: bool,
}

struct Chain<'a> {
    w: &'a Weight,
    ell: CompanionEll,
    ys: Vec<f64>,
    end: f64,
}

impl Chain<'_> {
    /// `log ∫_lo^hi e^{ℓ(t) − ψ(t) + shift(t)} dt`, split at the knots of `ℓ`.
    fn integral(&self, lo: f64, hi: f64, shift: impl Fn(f64) -> f64) -> Result<f64> {
        let hi = hi.min(self.end);
        if !(hi > lo) {
            return Ok(f64::NEG_INFINITY);
        }
        let spec = QuadratureSpec::new((lo, hi), QUAD_TOL).with_max_subdivisions(20_000).with_breakpoints(self.ys.iter().copied());
        let res = integrate_log(|t| LogReal::from_log(self.ell.eval(t) - self.w.psi(t) + shift(t)), &spec)?;
        Ok(res.value.logmag())
    }
}

/// Run the chain for `n ≤ N` with `N + 20` further Laplace points closing the sums and `E`.
pub fn verify_t2_chain(w: &Weight, n: usize, delta: f64) -> Result<T2ChainReport> {
    if n < 2 * SUM_RATIO_FROM {
        return Err(Error::Invalid(format!("N = {n} is below {}", 2 * SUM_RATIO_FROM)));
    }
    if !(delta > 0.0) {
        return Err(Error::Invalid(format!("δ = {delta} must be positive")));
    }
    let m = n + EXTRA_POINTS;
    let ys = laplace_points(w, m + 1)?;
    let regime = classify(w, ProbeWindow::new(ys[0], ys[m], 128))?;
    if regime.regime != Regime::T2Like {
        return Err(Error::Regime(format!("the weight is {:?} on [{}, {}]", regime.regime, ys[0], ys[m])));
    }
    let ell = companion_ell(w, &ys)?;
    let alpha: Vec<f64> = ys.iter().map(|&y| w.d2psi(y)).collect();
    let log_v: Vec<f64> = (0..=m).map(|s| w.psi(ys[s]) - ell.values[s] + 0.5 * alpha[s].ln()).collect();
    let chain = Chain { w, ell, ys: ys.clone(), end: ys[m + 1] };

    let log_a = chain.integral(0.0, chain.end, |_| 0.0)?;
    let g = GenFun::t2_product(&ys)?;
    let rows: Vec<ChainRow> = (0..=n)
        .into_par_iter()
        .map(|k| -> Result<ChainRow> {
            let y = ys[k];
            let base = chain.ell.values[k] - w.psi(y) - 0.5 * alpha[k].ln();
            let tail = chain.integral(y - delta, chain.end, |_| 0.0)?;
            let log_mass = chain.integral(0.0, y - delta, |t| 2.0 * t)?;
            let d = log_sum_exp(&log_v[..=k]);
            let e = log_sum_exp(&(k..=m).map(|s| log_v[s] - 2.0 * ys[s]).collect::<Vec<_>>());
            let dv = g.derivative_at_root(&Point::new(y, 0.0))?.logmag();
            let local = chain.integral(y - delta, ys[k + 1] - delta, |t| 2.0 * (t - y) - 2.0 * (t - y).max(0.0))?;
            let far = chain.integral(ys[k + 1] - delta, chain.end, |_| 0.0)?;
            let inner = chain.integral(0.0, ys[k + 1] - delta, |t| 2.0 * t)?;
            let later = log_sum_exp(&(k + 1..=m).map(|s| log_v[s] - 2.0 * ys[s]).collect::<Vec<_>>());
            Ok(ChainRow {
                n: k,
                y,
                alpha: alpha[k],
                log_v: log_v[k],
                b: (tail - base).exp(),
                c: (log_mass - base - 2.0 * y).exp(),
                d: (d - log_v[k]).exp(),
                e: (e - log_v[k] + 2.0 * y).exp(),
                es2: (2.0 * dv + 2.0 * y - chain.ell.values[k]).exp(),
                et1: (log_v[k] + local).exp(),
                et2: (d + far).exp(),
                et3: (later + inner).exp(),
                log_mass,
            })
        })
        .collect::<Result<_>>()?;

    let es2: Vec<f64> = rows.iter().map(|r| r.es2).collect();
    let es2_spread = es2.iter().copied().fold(0.0, f64::max) / es2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut envelope = (f64::INFINITY, 0.0f64);
    let mut envelope_upper = 0.0f64;
    for k in 0..n {
        for j in 0..ENVELOPE_SAMPLES {
            let t = ys[k] + (ys[k + 1] - ys[k]) * (j as f64 + 0.5) / ENVELOPE_SAMPLES as f64;
            let ratio = (2.0 * g.log_eval(&Point::new(t, 0.0))?.logmag() - chain.ell.eval(t)).exp();
            envelope_upper = envelope_upper.max(ratio);
            if t - ys[k] >= delta && ys[k + 1] - t >= delta {
                envelope = (envelope.0.min(ratio), envelope.1.max(ratio));
            }
        }
    }
    let col = |f: fn(&ChainRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (et1, et2, et3) = (Constant::of(&col(|r| r.et1)), Constant::of(&col(|r| r.et2)), Constant::of(&col(|r| r.et3)));
    let sums_in_range = rows[SUM_RATIO_FROM..]
        .iter()
        .all(|r| (1.0..=SUM_RATIO_MAX).contains(&r.d) && (1.0..=SUM_RATIO_MAX).contains(&r.e));
    let mass_increasing = rows.windows(2).all(|p| p[1].log_mass > p[0].log_mass);
    let pass = log_a.is_finite() && es2_spread <= ES2_MAX_SPREAD && et1.stable && et2.stable && et3.stable && sums_in_range && mass_increasing;
    Ok(T2ChainReport {
        n,
        delta,
        rows,
        log_a,
        es2_spread,
        envelope,
        envelope_upper,
        et1,
        et2,
        et3,
        sums_in_range,
        mass_increasing,
        pass,
    })
}

/// Nested finite sections of the normalized-kernel Gram matrix on `λ_n = e^{y_n}`.
pub fn t2_sections(w: &Weight, sizes: &[usize], table_len: usize) -> Result<RieszReport> {
    let n = *sizes.last().ok_or_else(|| Error::Invalid("no section sizes".into()))?;
    let tab = build_table(w, table_len, &default_spec())?;
    if n > tab.y.len() {
        return Err(Error::TableTooShort { len: tab.y.len(), required: n });
    }
    let pts = tab.y[..n].iter().map(|&y| Point::new(y, 0.0)).collect();
    let g = assemble_kernel_gram(&tab, &PointSet::new(pts, "laplace")?)?;
    nested_riesz(&g, sizes)
}
