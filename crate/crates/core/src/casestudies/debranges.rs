//! Norm ratio between `E_{R_n} = E/(z − R_n)` and `f_n`, the same function with the roots
//! `e^{2πis/n}R_n`, `1 ≤ s < n/2`, reflected across the real axis.

use std::f64::consts::PI;

use serde::Serialize;

use crate::genfun::{coeff_norm2, deflate, swap_roots, GenFun, GenFunKind, PolyCoeffs};
use crate::kernels::Point;
use crate::moments::MomentTable;
use crate::LogComplex;
use crate::{Error, Result};

pub const REAL_AXIS_SAMPLES: usize = 20;
pub const REAL_AXIS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DebrangesRow {
    pub n: usize,
    pub log_r: f64,
    /// `log ‖E_{R_n}‖²`.
    pub log_norm_e: f64,
    /// `log ‖f_n‖²`.
    pub log_norm_f: f64,
    /// `‖f_n‖² / ‖E_{R_n}‖²`.
    pub q: f64,
    /// Largest relative gap between `|f_n(x)|` and `|E(x)/(x − R_n)|` over the real samples.
    pub real_axis_dev: f64,
    pub cancelled: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DebrangesReport {
    pub rows: Vec<DebrangesRow>,
    pub increasing: bool,
    pub max_real_axis_dev: f64,
    pub pass: bool,
}

/// Real sample points: both signs, log-spaced between consecutive circles so no sample sits on
/// a zero.
fn real_samples(g: &GenFun) -> Vec<Point> {
    let mut lr: Vec<f64> = g.factors.iter().map(|f| f.root(0).logr).collect();
    lr.insert(0, lr[0] - 2.0);
    lr.push(lr[lr.len() - 1] + 2.0);
    (0..REAL_AXIS_SAMPLES)
        .map(|m| {
            let gap = m / 2 % (lr.len() - 1);
            let frac = 0.3 + 0.4 * ((m as f64 * 0.618_034) % 1.0);
            Point::new(lr[gap] + frac * (lr[gap + 1] - lr[gap]), if m % 2 == 0 { 0.0 } else { PI })
        })
        .collect()
}

fn ratio_row(g: &GenFun, coeffs: &PolyCoeffs, tab: &MomentTable, n: usize, samples: &[Point]) -> Result<DebrangesRow> {
    let log_r = g.factors[n - 1].root(0).logr;
    let e = deflate(coeffs, LogComplex::from_polar_log(log_r, 0.0))?.quotient;
    let (out, inn): (Vec<LogComplex>, Vec<LogComplex>) = (1..n.div_ceil(2))
        .map(|s| {
            let phi = 2.0 * PI * s as f64 / n as f64;
            (LogComplex::from_polar_log(log_r, phi), LogComplex::from_polar_log(log_r, -phi))
        })
        .unzip();
    let f = swap_roots(&e, &out, &inn)?;
    let r = Point::new(log_r, 0.0);
    let mut real_axis_dev = 0.0f64;
    for x in samples {
        let direct = g.log_eval(x)?.logmag() - x.distance(&r).ln();
        let dev = (f.log_eval(x).logmag() - direct).exp_m1().abs();
        real_axis_dev = real_axis_dev.max(dev);
    }
    let (log_norm_e, log_norm_f) = (coeff_norm2(&e, tab)?.logmag(), coeff_norm2(&f, tab)?.logmag());
    Ok(DebrangesRow {
        n,
        log_r,
        log_norm_e,
        log_norm_f,
        q: (log_norm_f - log_norm_e).exp(),
        real_axis_dev,
        cancelled: f.cancelled.iter().chain(&e.cancelled).filter(|&&c| c).count(),
    })
}

/// `Q_n` for each `n` in `ns`; fails hard when the real-axis identity misses by more than `1e-6`.
pub fn debranges_ratio(g: &GenFun, tab: &MomentTable, ns: std::ops::RangeInclusive<usize>) -> Result<DebrangesReport> {
    if g.kind != GenFunKind::T3Product {
        return Err(Error::Invalid("the norm ratio needs a lacunary block product".into()));
    }
    if *ns.start() < 3 || *ns.end() > g.depth() || ns.is_empty() {
        return Err(Error::Invalid(format!("circle range {ns:?} outside 3..={}", g.depth())));
    }
    let coeffs = g.coefficients();
    let samples = real_samples(g);
    let rows: Vec<DebrangesRow> = ns.map(|n| ratio_row(g, &coeffs, tab, n, &samples)).collect::<Result<_>>()?;
    let max_real_axis_dev = rows.iter().map(|r| r.real_axis_dev).fold(0.0, f64::max);
    if let Some(r) = rows.iter().find(|r| !(r.real_axis_dev <= REAL_AXIS_TOL)) {
        return Err(Error::Constraint {
            index: r.n,
            what: format!("|f_n| and |E_R_n| differ by {:e} on the real axis", r.real_axis_dev),
        });
    }
    let increasing = rows.windows(2).all(|p| p[1].q > p[0].q);
    let pass = increasing && rows[0].q > 0.0;
    Ok(DebrangesReport { rows, increasing, max_real_axis_dev, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{build_table, default_spec};
    use crate::weightlab::{LacunarySequence, Weight};

    fn setup(depth: usize) -> (GenFun, MomentTable) {
        let seq = LacunarySequence::squaring(depth);
        let g = GenFun::t3_product(&seq, depth).unwrap();
        let tab = build_table(&Weight::theorem3(seq), g.degree() + 4, &default_spec()).unwrap();
        (g, tab)
    }

    #[test]
    fn ratio_grows() {
        let (g, tab) = setup(7);
        let rep = debranges_ratio(&g, &tab, 3..=7).unwrap();
        assert!(rep.rows[0].q > 1.0, "{:?}", rep.rows[0]);
        assert!(rep.increasing, "{:?}", rep.rows.iter().map(|r| r.q).collect::<Vec<_>>());
        assert!(rep.max_real_axis_dev <= REAL_AXIS_TOL);
    }

    #[test]
    fn real_axis_identity_at_one_point() {
        let (g, tab) = setup(4);
        let coeffs = g.coefficients();
        let x = Point::new(1.3f64.ln(), 0.0);
        let row = ratio_row(&g, &coeffs, &tab, 3, &[x]).unwrap();
        assert!(row.real_axis_dev < 1e-10, "{}", row.real_axis_dev);
    }

    #[test]
    fn product_route_oracle() {
        // |f_n| off the real axis from its factored form
        let (g, _) = setup(4);
        let n = 4;
        let r = g.factors[n - 1].root(0).to_complex();
        let omega = num_complex::Complex::from_polar(r.re, PI / 2.0);
        let z = num_complex::Complex::new(3.0, 5.0);
        let e = g.log_eval(&Point::from_complex(z)).unwrap().to_complex() / (z - r);
        let f = e * (z - omega.conj()) / (z - omega);
        let coeffs = g.coefficients();
        let ee = deflate(&coeffs, LogComplex::from_polar_log(r.re.ln(), 0.0)).unwrap().quotient;
        let ff = swap_roots(&ee, &[LogComplex::from_complex(omega)], &[LogComplex::from_complex(omega.conj())]).unwrap();
        let got = ff.log_eval(&Point::from_complex(z)).to_complex();
        assert!((got - f).norm() / f.norm() < 1e-9, "{got} {f}");
    }

    #[test]
    fn bad_ranges() {
        let (g, tab) = setup(4);
        assert!(debranges_ratio(&g, &tab, 2..=4).is_err());
        assert!(debranges_ratio(&g, &tab, 3..=5).is_err());
        let t2 = GenFun::t2_product(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(debranges_ratio(&t2, &tab, 3..=3).is_err());
    }
}
