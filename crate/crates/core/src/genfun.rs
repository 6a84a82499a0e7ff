//! Products with known roots: `∏(1 − z/λ_n)`, lacunary blocks `∏(1 − (z/R_n)^{k_n})` and the
//! monomial-scaled block polynomials `e^a z^k P(z)`, evaluated in the log domain and expanded into
//! coefficients for norm computations.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::io::{fmt_f64, write_rows};
use crate::kernels::Point;
use crate::moments::MomentTable;
use crate::numeric::{log_sum, log_sum_complex, wrap_phase};
use crate::weightlab::LacunarySequence;
use crate::{Complex, Error, LogComplex, LogReal, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Factor {
    /// `1 − z/λ` with `λ = e^{log_root + i theta}`.
    Simple { log_root: f64, theta: f64 },
    /// `1 − (z/R)^k`.
    Block { log_r: f64, k: usize },
}

impl Factor {
    fn log_radius(&self) -> f64 {
        match *self {
            Factor::Simple { log_root, .. } => log_root,
            Factor::Block { log_r, .. } => log_r,
        }
    }

    fn multiplicity(&self) -> usize {
        match *self {
            Factor::Simple { .. } => 1,
            Factor::Block { k, .. } => k,
        }
    }

    /// Index of the root nearest to `z` and the reduced exponent `u` with `1 − e^u` equal to the
    /// factor at `z`; `Im u` is reduced around that root.
    fn reduced(&self, z: &Point) -> (usize, Complex) {
        match *self {
            Factor::Simple { log_root, theta } => (0, Complex::new(z.logr - log_root, wrap_phase(z.theta - theta))),
            Factor::Block { log_r, k } => {
                let kf = k as f64;
                let j = (kf * z.theta / (2.0 * PI)).round();
                let off = wrap_phase(z.theta - 2.0 * PI * j / kf);
                (j.rem_euclid(kf) as usize, Complex::new(kf * (z.logr - log_r), kf * off))
            }
        }
    }

    /// Log-plane distance from `z` to the nearest root of this factor.
    fn root_distance(&self, z: &Point) -> (usize, f64) {
        let (j, u) = self.reduced(z);
        let k = self.multiplicity() as f64;
        (j, (u / k).norm())
    }

    pub fn root(&self, j: usize) -> Point {
        match *self {
            Factor::Simple { log_root, theta } => Point::new(log_root, theta),
            Factor::Block { log_r, k } => Point::new(log_r, 2.0 * PI * j as f64 / k as f64),
        }
    }
}

/// Far-factor fast path threshold on `|log |z/R|^k|`.
pub const FAR_FACTOR: f64 = 30.0;
/// Points closer than this to a root (in the `log z` plane) count as hitting it.
pub const ROOT_HIT: f64 = 1e-12;

/// `log(1 − e^u)` as a log-magnitude and phase.
fn log_one_minus_exp(u: Complex) -> LogComplex {
    if u.re <= -FAR_FACTOR {
        // log(1 − w) = −w + O(w²), |w| ≤ e^{−30}
        let w = u.exp();
        LogComplex::from_polar_log(-w.re - 0.5 * (w * w).re, -w.im - 0.5 * (w * w).im)
    } else if u.re >= FAR_FACTOR {
        // 1 − e^u = −e^u (1 − e^{−u})
        let w = (-u).exp();
        LogComplex::from_polar_log(u.re - w.re, u.im + PI - w.im)
    } else {
        let (a, b) = (u.re, u.im);
        let half = (0.5 * b).sin();
        let expm1 = Complex::new(a.exp_m1() * b.cos() - 2.0 * half * half, a.exp() * b.sin());
        LogComplex::from_complex(-expm1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GenFunKind {
    /// `∏_{n≥0} (1 − z/λ_n)` over Laplace points `λ_n = e^{y_n}`.
    T2Product,
    /// `∏_{n≥1} (1 − (z/R_n)^n)`.
    T3Product,
    /// `e^a z^k ∏_j (1 − (z/R_j)^{k_j})`.
    L2Block,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenFun {
    pub factors: Vec<Factor>,
    pub kind: GenFunKind,
    /// Monomial prefactor `e^a z^k`.
    pub prefactor: (f64, usize),
}

impl GenFun {
    fn checked(factors: Vec<Factor>, kind: GenFunKind) -> Result<Self> {
        for (i, w) in factors.windows(2).enumerate() {
            if !(w[1].log_radius() > w[0].log_radius()) {
                return Err(Error::Constraint { index: i + 1, what: "factor radii must increase strictly".into() });
            }
        }
        Ok(GenFun { factors, kind, prefactor: (0.0, 0) })
    }

    /// `∏_{n=0}^{N} (1 − z/e^{y_n})`.
    pub fn t2_product(ys: &[f64]) -> Result<Self> {
        Self::checked(ys.iter().map(|&y| Factor::Simple { log_root: y, theta: 0.0 }).collect(), GenFunKind::T2Product)
    }

    /// `∏_{n=1}^{N} (1 − (z/R_n)^n)`.
    pub fn t3_product(seq: &LacunarySequence, depth: usize) -> Result<Self> {
        Self::checked(
            (1..=depth).map(|n| Factor::Block { log_r: seq.log_r(n), k: n }).collect(),
            GenFunKind::T3Product,
        )
    }

    /// `∏_j (1 − (z/R_j)^{k_j})` from `(log R_j, k_j)` pairs.
    pub fn l2_block(blocks: &[(f64, usize)]) -> Result<Self> {
        if let Some(i) = blocks.iter().position(|b| b.1 == 0) {
            return Err(Error::Constraint { index: i, what: "block multiplicity must be positive".into() });
        }
        Self::checked(blocks.iter().map(|&(log_r, k)| Factor::Block { log_r, k }).collect(), GenFunKind::L2Block)
    }

    pub fn with_prefactor(mut self, a: f64, k: usize) -> Self {
        self.prefactor = (a, k);
        self
    }

    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    pub fn degree(&self) -> usize {
        self.prefactor.1 + self.factors.iter().map(Factor::multiplicity).sum::<usize>()
    }

    /// All zeros of the product part, factor by factor.
    pub fn roots(&self) -> Vec<Point> {
        self.factors.iter().flat_map(|f| (0..f.multiplicity()).map(move |j| f.root(j))).collect()
    }

    pub fn log_eval(&self, z: &Point) -> Result<LogComplex> {
        let (a, k) = self.prefactor;
        if z.is_origin() {
            return Ok(if k == 0 { LogComplex::from_polar_log(a, 0.0) } else { LogComplex::zero() });
        }
        let mut logmag = a + k as f64 * z.logr;
        let mut phase = k as f64 * z.theta;
        for (i, f) in self.factors.iter().enumerate() {
            let (j, d) = f.root_distance(z);
            if d < ROOT_HIT {
                return Err(Error::RootHit { factor: i, root: j });
            }
            let v = log_one_minus_exp(f.reduced(z).1);
            logmag += v.logmag();
            phase += v.phase();
        }
        Ok(LogComplex::from_polar_log(logmag, phase))
    }

    /// `v(t) = Σ_{R_s ≤ t} k_s (log t − log R_s)`; the monomial prefactor is not included.
    pub fn envelope_v(&self, logt: f64) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.log_radius() <= logt)
            .map(|f| f.multiplicity() as f64 * (logt - f.log_radius()))
            .sum()
    }

    fn owner(&self, root: &Point) -> Result<(usize, usize)> {
        let mut best = (usize::MAX, 0, f64::INFINITY);
        for (i, f) in self.factors.iter().enumerate() {
            let (j, d) = f.root_distance(root);
            if d < best.2 {
                best = (i, j, d);
            }
        }
        if best.2 > ROOT_TOL {
            return Err(Error::NotARoot { residual: best.2 });
        }
        Ok((best.0, best.1))
    }

    /// `E'(ω)` at a zero `ω`: the derivative of the owning factor times the other factors.
    pub fn derivative_at_root(&self, root: &Point) -> Result<LogComplex> {
        let (i, j) = self.owner(root)?;
        let f = self.factors[i];
        let omega = f.root(j);
        // simple: −1/λ; block: −k ω^{k−1}/R^k = −k/ω
        let k = f.multiplicity() as f64;
        let mut logmag = k.ln() - omega.logr;
        let mut phase = PI - omega.theta;
        let (a, pk) = self.prefactor;
        logmag += a + pk as f64 * omega.logr;
        phase += pk as f64 * omega.theta;
        for (m, g) in self.factors.iter().enumerate() {
            if m != i {
                let v = log_one_minus_exp(g.reduced(&omega).1);
                logmag += v.logmag();
                phase += v.phase();
            }
        }
        Ok(LogComplex::from_polar_log(logmag, phase))
    }

    /// Coefficients by block-wise convolution in the log domain.
    pub fn coefficients(&self) -> PolyCoeffs {
        let (a, pk) = self.prefactor;
        let mut c = vec![LogComplex::one()];
        let mut abs = vec![LogReal::one()];
        for f in &self.factors {
            let (k, lead) = match *f {
                Factor::Simple { log_root, theta } => (1, LogComplex::from_polar_log(-log_root, PI - theta)),
                Factor::Block { log_r, k } => (k, LogComplex::from_polar_log(-(k as f64) * log_r, PI)),
            };
            let mut next = vec![LogComplex::zero(); c.len() + k];
            let mut next_abs = vec![LogReal::zero(); c.len() + k];
            for d in 0..next.len() {
                let mut terms = Vec::with_capacity(2);
                let mut mags = Vec::with_capacity(2);
                if d < c.len() {
                    terms.push(c[d]);
                    mags.push(abs[d]);
                }
                if d >= k && d - k < c.len() {
                    terms.push(c[d - k] * lead);
                    mags.push(abs[d - k] * lead.abs());
                }
                next[d] = log_sum_complex(&terms).value;
                next_abs[d] = log_sum(&mags).value;
            }
            c = next;
            abs = next_abs;
        }
        let factor = LogComplex::from_polar_log(a, 0.0);
        let mut coeffs = vec![LogComplex::zero(); pk];
        let mut scale = vec![LogReal::zero(); pk];
        for (v, m) in c.iter().zip(&abs) {
            coeffs.push(*v * factor);
            scale.push(*m * factor.abs());
        }
        PolyCoeffs::with_scale(coeffs, scale, vec![format!("{:?} product, depth {}", self.kind, self.depth())])
    }
}

/// A point counts as a root when it is this close to one in the `log z` plane.
pub const ROOT_TOL: f64 = 1e-9;
/// Coefficients that lost more than six digits to cancellation are flagged.
const CANCELLATION_LOG: f64 = -13.815_510_557_964_274; // ln 1e-6

/// Smallest depth `N` with `(N+1)(log|z| − log R_{N+1}) ≤ −30` at the largest evaluation radius.
pub fn t3_depth_for(seq: &LacunarySequence, max_logr: f64) -> usize {
    let mut n = 1;
    while (n + 1) as f64 * (max_logr - seq.log_r(n + 1)) > -FAR_FACTOR {
        n += 1;
    }
    n
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyCoeffs {
    pub coeffs: Vec<LogComplex>,
    /// Sum of the magnitudes of every term that went into each coefficient; rounding error is
    /// relative to this, not to the coefficient.
    pub scale: Vec<LogReal>,
    /// Coefficients more than six digits below their scale.
    pub cancelled: Vec<bool>,
    pub provenance: Vec<String>,
}

fn flagged(v: &LogComplex, scale: &LogReal) -> bool {
    if v.is_zero() {
        return !scale.is_zero();
    }
    v.logmag() < scale.logmag() + CANCELLATION_LOG
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<LogComplex>) -> Self {
        let scale = coeffs.iter().map(|c| c.abs()).collect();
        Self::with_scale(coeffs, scale, vec!["explicit".into()])
    }

    fn with_scale(coeffs: Vec<LogComplex>, scale: Vec<LogReal>, provenance: Vec<String>) -> Self {
        let cancelled = coeffs.iter().zip(&scale).map(|(c, s)| flagged(c, s)).collect();
        PolyCoeffs { coeffs, scale, cancelled, provenance }
    }

    pub fn from_complex(coeffs: &[Complex]) -> Self {
        Self::new(coeffs.iter().map(|&c| LogComplex::from_complex(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    /// `Σ c_d z^d`, summed in the log domain so the dominant term sets the scale.
    pub fn log_eval(&self, z: &Point) -> LogComplex {
        if z.is_origin() {
            return self.coeffs.first().copied().unwrap_or(LogComplex::zero());
        }
        let terms: Vec<LogComplex> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| *c * LogComplex::from_polar_log(d as f64 * z.logr, d as f64 * z.theta))
            .collect();
        log_sum_complex(&terms).value
    }

    /// Multiply by `z − λ`.
    pub fn multiply_root(&self, root: LogComplex) -> PolyCoeffs {
        let n = self.coeffs.len();
        let mut out = Vec::with_capacity(n + 1);
        let mut scale = Vec::with_capacity(n + 1);
        for d in 0..=n {
            let mut terms = Vec::with_capacity(2);
            let mut mags = Vec::with_capacity(2);
            if d >= 1 {
                terms.push(self.coeffs[d - 1]);
                mags.push(self.scale[d - 1]);
            }
            if d < n {
                terms.push((self.coeffs[d] * root).neg());
                mags.push(self.scale[d] * root.abs());
            }
            out.push(log_sum_complex(&terms).value);
            scale.push(log_sum(&mags).value);
        }
        let mut provenance = self.provenance.clone();
        provenance.push(format!("multiply (z - root), log|root| = {}", root.logmag()));
        PolyCoeffs::with_scale(out, scale, provenance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deflation {
    pub quotient: PolyCoeffs,
    /// `|p(λ)| / max_k |c_k λ^k|`.
    pub residual: f64,
}

/// Largest admissible `|p(λ)| / max_k |c_k λ^k|` for a deflation root.
pub const DEFLATION_TOL: f64 = 1e-6;

/// Divide by `z − λ`.
///
/// The quotient is built from the top by `q_{k−1} = c_k + λ q_k` down to the dominant index
/// `s = argmax |c_k λ^k|`, and from the bottom by `q_k = (q_{k−1} − c_k)/λ` below it, so each
/// recurrence runs in the direction where it does not amplify rounding.
pub fn deflate(p: &PolyCoeffs, root: LogComplex) -> Result<Deflation> {
    let c = &p.coeffs;
    let deg = p.degree();
    if deg == 0 {
        return Err(Error::Invalid("cannot deflate a constant".into()));
    }
    let c = &c[..=deg];
    let mut provenance = p.provenance.clone();
    provenance.push(format!("deflate at log|root| = {}, arg = {}", root.logmag(), root.phase()));
    if root.is_zero() {
        if !c[0].is_zero() {
            return Err(Error::NotARoot { residual: f64::INFINITY });
        }
        return Ok(Deflation {
            quotient: PolyCoeffs::with_scale(c[1..].to_vec(), p.scale[1..=deg].to_vec(), provenance),
            residual: 0.0,
        });
    }
    let weighted: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, v)| if v.is_zero() { f64::NEG_INFINITY } else { v.logmag() + k as f64 * root.logmag() })
        .collect();
    let (s, top) = weighted.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
    let value = p.log_eval(&Point::new(root.logmag(), root.phase()));
    let residual = if value.is_zero() { 0.0 } else { (value.logmag() - top).exp() };
    if residual > DEFLATION_TOL {
        return Err(Error::NotARoot { residual });
    }
    let sc = &p.scale;
    let mut q = vec![LogComplex::zero(); deg];
    let mut scale = vec![LogReal::zero(); deg];
    // top-down: q_{deg−1} = c_deg, q_{k−1} = c_k + λ q_k, for k − 1 ≥ s
    q[deg - 1] = c[deg];
    scale[deg - 1] = sc[deg];
    for k in (s + 1..deg).rev() {
        q[k - 1] = log_sum_complex(&[c[k], root * q[k]]).value;
        scale[k - 1] = log_sum(&[sc[k], root.abs() * scale[k]]).value;
    }
    // bottom-up: q_0 = −c_0/λ, q_k = (q_{k−1} − c_k)/λ, for k < s
    let inv = root.recip();
    for k in 0..s.min(deg) {
        let (prev, prev_scale) = if k == 0 { (LogComplex::zero(), LogReal::zero()) } else { (q[k - 1], scale[k - 1]) };
        q[k] = log_sum_complex(&[prev, c[k].neg()]).value * inv;
        scale[k] = log_sum(&[prev_scale, sc[k]]).value * inv.abs();
    }
    Ok(Deflation { quotient: PolyCoeffs::with_scale(q, scale, provenance), residual })
}

/// Sample count for the real-axis modulus check in [`swap_roots`].
const SWAP_SAMPLES: usize = 20;
pub const SWAP_MODULUS_TOL: f64 = 1e-6;

/// Replace roots `out[i]` by `inn[i]`. When every incoming root is the conjugate of the outgoing
/// one, `|p(x)|` on the real axis is preserved; this is checked at 20 points.
pub fn swap_roots(p: &PolyCoeffs, out: &[LogComplex], inn: &[LogComplex]) -> Result<PolyCoeffs> {
    if out.len() != inn.len() {
        return Err(Error::Invalid(format!("{} roots out, {} roots in", out.len(), inn.len())));
    }
    let mut q = p.clone();
    for (o, i) in out.iter().zip(inn) {
        q = deflate(&q, *o)?.quotient.multiply_root(*i);
    }
    let conjugate = out.iter().zip(inn).all(|(o, i)| {
        (o.logmag() - i.logmag()).abs() < 1e-12 && wrap_phase(o.phase() + i.phase()).abs() < 1e-12
    });
    if conjugate && !out.is_empty() {
        let (lo, hi) = out.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.logmag()), b.max(r.logmag())));
        for m in 0..SWAP_SAMPLES {
            let lr = lo - 1.0 + (hi - lo + 2.0) * (m as f64 + 0.37) / SWAP_SAMPLES as f64;
            let x = Point::new(lr, if m % 2 == 0 { 0.0 } else { PI });
            let (a, b) = (p.log_eval(&x), q.log_eval(&x));
            if a.is_zero() && b.is_zero() {
                continue;
            }
            let dev = (a.logmag() - b.logmag()).abs();
            if dev > SWAP_MODULUS_TOL {
                return Err(Error::Constraint { index: m, what: format!("real-axis modulus changed by {dev:e} in log") });
            }
        }
    }
    Ok(q)
}

/// `‖Σ c_d z^d‖² = Σ |c_d|² m_d`.
pub fn coeff_norm2(p: &PolyCoeffs, tab: &MomentTable) -> Result<LogReal> {
    let deg = p.degree();
    if tab.len() <= deg {
        return Err(Error::TableTooShort { len: tab.len(), required: deg + 1 });
    }
    let terms: Vec<LogReal> = p.coeffs[..=deg]
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(d, c)| LogReal::from_log(2.0 * c.logmag() + tab.log_m(d)))
        .collect();
    Ok(log_sum(&terms).value)
}

/// `⟨p, q⟩ = Σ p_d conj(q_d) m_d`, with a flag when more than six digits cancel.
pub fn coeff_inner(p: &PolyCoeffs, q: &PolyCoeffs, tab: &MomentTable) -> Result<(LogComplex, bool)> {
    let n = p.degree().min(q.degree());
    if tab.len() <= n {
        return Err(Error::TableTooShort { len: tab.len(), required: n + 1 });
    }
    let terms: Vec<LogComplex> = (0..=n)
        .filter(|&d| !p.coeffs[d].is_zero() && !q.coeffs[d].is_zero())
        .map(|d| p.coeffs[d] * q.coeffs[d].conj() * LogComplex::from_polar_log(tab.log_m(d), 0.0))
        .collect();
    let mags: Vec<LogReal> = terms.iter().map(|t| t.abs()).collect();
    let s = log_sum_complex(&terms);
    let scale = log_sum(&mags).value;
    Ok((s.value, s.cancelled || flagged(&s.value, &scale)))
}

pub fn write_coeffs_csv<W: Write>(p: &PolyCoeffs, out: W) -> Result<()> {
    let rows = p.coeffs.iter().zip(&p.cancelled).enumerate().map(|(d, (c, &f))| {
        let (lm, ph) = if c.is_zero() { (f64::NEG_INFINITY, 0.0) } else { (c.logmag(), c.phase()) };
        vec![d.to_string(), fmt_f64(lm), fmt_f64(ph), (f as u8).to_string()]
    });
    write_rows(out, &["degree", "logmag", "phase", "cancelled"], rows)
}
