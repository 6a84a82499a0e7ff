use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceOrigin {
    User,
    /// Produced by [`choose_r_for_phi`].
    Greedy,
}

/// Radii `R_1 < R_2 < …` with `R_1 ≥ 2` and `R_{n+1} ≥ R_n²`, stored as `log R_n`.
///
/// Indices are 1-based. Past the stored depth the sequence continues by squaring,
/// `log R_{n+1} = 2 log R_n`, which keeps the lacunarity condition with equality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LacunarySequence {
    log_r: Vec<f64>,
    origin: SequenceOrigin,
}

const LOG2: f64 = std::f64::consts::LN_2;

impl LacunarySequence {
    pub fn new(log_r: Vec<f64>, origin: SequenceOrigin) -> Result<Self> {
        if log_r.is_empty() {
            return Err(Error::Invalid("lacunary sequence needs at least one radius".into()));
        }
        if !(log_r[0] >= LOG2 - 1e-15) {
            return Err(Error::Constraint { index: 1, what: format!("log R_1 = {} < log 2", log_r[0]) });
        }
        for (i, w) in log_r.windows(2).enumerate() {
            if !(w[1] >= 2.0 * w[0] - 1e-12 * w[0].abs()) || !w[1].is_finite() {
                return Err(Error::Constraint {
                    index: i + 2,
                    what: format!("log R_{} = {} < 2 log R_{} = {}", i + 2, w[1], i + 1, 2.0 * w[0]),
                });
            }
        }
        Ok(LacunarySequence { log_r, origin })
    }

    pub fn from_radii(radii: &[f64]) -> Result<Self> {
        Self::new(radii.iter().map(|r| r.ln()).collect(), SequenceOrigin::User)
    }

    /// `R_1 = 2`, `R_{n+1} = R_n²`.
    pub fn squaring(depth: usize) -> Self {
        let log_r = (0..depth.max(1)).map(|k| LOG2 * 2f64.powi(k as i32)).collect();
        LacunarySequence { log_r, origin: SequenceOrigin::User }
    }

    pub fn depth(&self) -> usize {
        self.log_r.len()
    }

    pub fn origin(&self) -> SequenceOrigin {
        self.origin
    }

    pub fn stored(&self) -> &[f64] {
        &self.log_r
    }

    /// `log R_n` for any `n ≥ 1`, continuing past the stored depth by squaring.
    pub fn log_r(&self, n: usize) -> f64 {
        assert!(n >= 1, "lacunary sequence is 1-based");
        let d = self.log_r.len();
        if n <= d {
            self.log_r[n - 1]
        } else {
            self.log_r[d - 1] * 2f64.powi((n - d) as i32)
        }
    }

    /// Index `n ≥ 1` with `log R_n ≤ t < log R_{n+1}`, or 0 when `t < log R_1`.
    pub fn segment(&self, t: f64) -> usize {
        if t < self.log_r[0] {
            return 0;
        }
        let mut n = 1;
        while self.log_r(n + 1) <= t {
            n += 1;
        }
        n
    }

    /// Piecewise-linear `ψ` built on this sequence:
    /// `ψ(t) = t + 2Σ_{s≤n} s(t − log R_s) + n·min(t − log R_n, log R_{n+1} − t)` on
    /// `[log R_n, log R_{n+1}]`, and `ψ(t) = t` below `log R_1`.
    pub fn psi(&self, t: f64) -> f64 {
        let n = self.segment(t);
        if n == 0 {
            return t;
        }
        let mut acc = t;
        for s in 1..=n {
            acc += 2.0 * s as f64 * (t - self.log_r(s));
        }
        let lo = t - self.log_r(n);
        let hi = self.log_r(n + 1) - t;
        acc + n as f64 * lo.min(hi)
    }

    /// Right derivative of [`Self::psi`].
    pub fn dpsi(&self, t: f64) -> f64 {
        let n = self.segment(t);
        if n == 0 {
            return 1.0;
        }
        let base = 1.0 + (n * (n + 1)) as f64;
        if t < self.midpoint(n) {
            base + n as f64
        } else {
            base - n as f64
        }
    }

    pub fn midpoint(&self, n: usize) -> f64 {
        0.5 * (self.log_r(n) + self.log_r(n + 1))
    }

    /// All corners of `ψ` (knots and midpoints) in `[log R_1, upto]`, ascending.
    pub fn corners(&self, upto: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut n = 1;
        loop {
            let k = self.log_r(n);
            if k > upto {
                break;
            }
            out.push(k);
            let m = self.midpoint(n);
            if m <= upto {
                out.push(m);
            }
            n += 1;
        }
        out
    }
}

/// One row of the greedy certificate: `ψ(log R_{n+1}) / φ(log R_{n+1}) ≤ 1/n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyStep {
    pub n: usize,
    pub log_r_next: f64,
    pub ratio: f64,
    pub doubled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyCertificate {
    pub steps: Vec<GreedyStep>,
}

/// Default horizon for the greedy search in the log-radius coordinate.
pub const GREEDY_HORIZON: f64 = 1e9;

/// Check that `φ` is convex and grows faster than linearly on sampled points.
fn check_phi(phi: &dyn Fn(f64) -> f64) -> Result<()> {
    let xs: Vec<f64> = (0..40).map(|k| 2f64.powf(k as f64 * 0.5)).collect();
    let ratios: Vec<f64> = xs.iter().map(|&x| phi(x) / x).collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::Precondition("phi is not finite on the sample grid".into()));
    }
    for (i, w) in xs.windows(3).enumerate() {
        let (a, b, c) = (w[0], w[1], w[2]);
        let lam = (c - b) / (c - a);
        if phi(b) > lam * phi(a) + (1.0 - lam) * phi(c) + 1e-9 * phi(b).abs().max(1.0) {
            return Err(Error::Precondition(format!("phi is not convex near x = {}", xs[i + 1])));
        }
    }
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    let increasing = ratios.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs());
    if !(increasing && last > 4.0 * first.max(1e-300) && last > first + 1.0) {
        return Err(Error::Precondition("phi(x)/x does not grow: x = o(phi(x)) fails on samples".into()));
    }
    Ok(())
}

/// `ψ(x)` on `[log R_n, log R_{n+1}]` evaluated at its right end `x = log R_{n+1}`, which does not
/// depend on `R_{n+1}`: `x + 2Σ_{s≤n} s(x − log R_s)`.
fn psi_at_next_knot(log_r: &[f64], x: f64) -> f64 {
    x + log_r.iter().enumerate().map(|(i, &l)| 2.0 * (i + 1) as f64 * (x - l)).sum::<f64>()
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Greedy lacunary sequence keeping `ψ` below `φ`: `log R_1 = log 2` and `log R_{n+1}` is the
/// larger of `2 log R_n` and the smallest `x` beyond which `ψ(x) ≤ φ(x)/n` holds.
pub fn choose_r_for_phi(
    phi: &dyn Fn(f64) -> f64,
    depth: usize,
    horizon: f64,
) -> Result<(LacunarySequence, GreedyCertificate)> {
    check_phi(phi)?;
    let mut log_r = vec![LOG2];
    let mut steps = Vec::new();
    while log_r.len() < depth {
        let n = log_r.len();
        let nf = n as f64;
        let gap = |x: f64| phi(x) / nf - psi_at_next_knot(&log_r, x);
        let lo = 2.0 * log_r[n - 1];
        // convex gap: find a point past its minimum where it is already non-negative
        let mut step = lo.max(1.0);
        let mut hi = lo;
        loop {
            let slope_ok = gap(hi + 1e-6 * hi.max(1.0)) >= gap(hi);
            if gap(hi) >= 0.0 && slope_ok {
                break;
            }
            hi = lo + step;
            step *= 2.0;
            if hi > horizon {
                return Err(Error::Horizon {
                    horizon,
                    what: format!("phi grows too slowly for greedy step n = {n}"),
                });
            }
        }
        let x = if hi == lo {
            lo
        } else {
            let m = golden_min(&gap, lo, hi);
            if gap(m) >= 0.0 {
                lo
            } else {
                let (mut a, mut b) = (m, hi);
                for _ in 0..200 {
                    let c = 0.5 * (a + b);
                    if gap(c) >= 0.0 {
                        b = c;
                    } else {
                        a = c;
                    }
                    if b - a <= 1e-14 * b.abs().max(1.0) {
                        break;
                    }
                }
                b
            }
        };
        let x = x.max(lo);
        let ratio = psi_at_next_knot(&log_r, x) / phi(x);
        steps.push(GreedyStep { n, log_r_next: x, ratio, doubled: x == lo });
        log_r.push(x);
    }
    Ok((LacunarySequence::new(log_r, SequenceOrigin::Greedy)?, GreedyCertificate { steps }))
}
