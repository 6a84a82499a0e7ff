//! Polynomials `Q = e^a z^k ∏_j (1 − (z/R_j)^{k_j})` whose modulus tracks `e^{h}` on a flat
//! annulus of a fast-growing weight, with sampled checks of the four two-sided bounds.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::casestudies::obstruction::linear_fit;
use crate::genfun::GenFun;
use crate::kernels::Point;
use crate::weightlab::{classify, find_flat_point, ProbeWindow, Regime, Weight};
use crate::{Error, Result};

/// Where the flat-point scan starts and how far it may go, in `log r`.
pub const FLAT_START: f64 = 0.0;
pub const FLAT_HORIZON: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QReport {
    pub a_param: f64,
    pub y: f64,
    pub r: f64,
    pub tau: f64,
    pub rho: f64,
    /// Prefactor `e^a z^k`.
    pub log_scale: f64,
    pub k: usize,
    /// `(log R_j, k_j)`.
    pub blocks: Vec<(f64, usize)>,
    /// `max` of `(R_{j+1} − R_j)/(e^y τ)` and its reciprocal.
    pub spacing_b: f64,
    /// `max` of `k_j τ` and its reciprocal.
    pub k_tau_b: f64,
    /// `max_j ||R_j| − R| / ρ`; the zeros lie in `Ω_{R,2A}` when this is at most `2A`.
    pub root_spread: f64,
    /// `exp max |log(|Q| ρ e^{−h} / dist(z, Z(Q)))|` over samples in `Ω_{R,A}`.
    pub m_two_sided: f64,
    /// `exp max (log|Q| − h)` over a wider sample.
    pub m_upper: f64,
    /// `ρ / min gap` between distinct nonzero zeros.
    pub m_separation: f64,
    /// `max dist(z, Z(Q)) / ρ` over samples in `Ω_{R,A}`.
    pub m_density: f64,
    pub m: f64,
    pub samples: usize,
}

/// Distance from `z` to the nearest zero of `1 − (z/R)^k`.
fn block_distance(z: &Point, log_r: f64, k: usize) -> f64 {
    let kf = k as f64;
    let j = (z.theta * kf / (2.0 * PI)).round();
    (-1..=1)
        .map(|d| z.distance(&Point::new(log_r, 2.0 * PI * (j + d as f64) / kf)))
        .fold(f64::INFINITY, f64::min)
}

fn zero_distance(z: &Point, blocks: &[(f64, usize)]) -> f64 {
    blocks.iter().map(|&(lr, k)| block_distance(z, lr, k)).fold(f64::INFINITY, f64::min)
}

/// Smallest distance between distinct nonzero zeros; blocks further apart than three knots are
/// radially separated by more than any adjacent pair.
fn min_root_gap(blocks: &[(f64, usize)]) -> f64 {
    (0..blocks.len())
        .into_par_iter()
        .map(|i| {
            let (lr, k) = blocks[i];
            let r = lr.exp();
            let mut best = if k > 1 { 2.0 * r * (PI / k as f64).sin() } else { f64::INFINITY };
            for &(lr2, k2) in &blocks[i + 1..(i + 4).min(blocks.len())] {
                for j in 0..k {
                    let w = Point::new(lr, 2.0 * PI * j as f64 / k as f64);
                    best = best.min(block_distance(&w, lr2, k2));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

pub fn build_q(w: &Weight, a: f64) -> Result<(f64, GenFun, QReport)> {
    if !(a >= 1.0) {
        return Err(Error::Invalid(format!("A = {a} must be at least 1")));
    }
    let flat = find_flat_point(w, a, FLAT_START, FLAT_HORIZON)?;
    let (y, tau) = (flat.y, flat.tau);
    let regime = classify(w, ProbeWindow::new(y - 1.0, y + 1.0, 64))?;
    if regime.regime != Regime::T1Like {
        return Err(Error::Regime(format!("the weight is {:?} around log R = {y}", regime.regime)));
    }
    let r = y.exp();
    let rho = r * tau;
    let count = (4.0 * a).floor() as usize;
    let r0 = r - 0.5 * count as f64 * rho;
    if !(r0 > 0.0) {
        return Err(Error::Precondition(format!("annulus of half-width {} ρ around R = {r} reaches the origin", 0.5 * count as f64)));
    }
    // radii R_j = R − 2Aρ + (j + ½)ρ, evenly spaced by ρ
    let knots: Vec<f64> = (0..count).map(|j| (r0 + (j as f64 + 0.5) * rho).ln()).collect();
    // integer slopes tracking ψ' on each segment between knots
    let mut slopes = Vec::with_capacity(count + 1);
    for j in 0..=count {
        let s = w.dpsi((r0 + j as f64 * rho).ln()).round().max(0.0) as usize;
        slopes.push(if j == 0 { s } else { s.max(slopes[j - 1] + 1) });
    }
    let ks: Vec<usize> = (0..count).map(|j| slopes[j + 1] - slopes[j]).collect();
    let blocks: Vec<(f64, usize)> = knots.iter().copied().zip(ks.iter().copied()).collect();
    let v = |t: f64| -> f64 { blocks.iter().filter(|b| b.0 <= t).map(|&(lr, k)| k as f64 * (t - lr)).sum() };
    let resid: Vec<f64> = knots.iter().map(|&x| w.psi(x) - v(x)).collect();
    let (k_real, _, _) = linear_fit(&knots, &resid);
    let k = k_real.round().max(0.0) as usize;
    let log_scale = knots.iter().zip(&resid).map(|(x, rr)| rr - k as f64 * x).sum::<f64>() / count as f64;
    let g = GenFun::l2_block(&blocks)?.with_prefactor(log_scale, k);

    let spacing_b = knots
        .windows(2)
        .map(|p| {
            let q = (p[1].exp() - p[0].exp()) / rho;
            q.max(1.0 / q)
        })
        .fold(1.0, f64::max);
    let k_tau_b = ks.iter().map(|&kj| (kj as f64 * tau).max(1.0 / (kj as f64 * tau))).fold(1.0, f64::max);
    let root_spread = knots.iter().map(|x| (x.exp() - r).abs() / rho).fold(0.0, f64::max);

    // Ω_{R,A}: ρ/8 radial step, an angular sector covering 64 zero spacings at ρ/(8R) resolution
    let nr = (16.0 * a).ceil() as usize;
    let dth = tau / 8.0;
    let nth = ((64.0 * tau).min(2.0 * PI) / dth).ceil() as usize;
    let samples: Vec<Point> = (0..nr)
        .flat_map(|i| {
            let rad = r - a * rho + 2.0 * a * rho * (i as f64 + 0.37) / nr as f64;
            (0..nth).map(move |j| Point::new(rad.ln(), (j as f64 + 0.29) * dth))
        })
        .collect();
    let vals: Vec<(f64, f64)> = samples
        .par_iter()
        .filter_map(|z| {
            let lq = g.log_eval(z).ok()?.logmag();
            let d = zero_distance(z, &blocks);
            Some(((lq + rho.ln() - w.psi(z.logr) - d.ln()).abs(), d / rho))
        })
        .collect();
    let m_two_sided = vals.iter().map(|v| v.0).fold(0.0, f64::max).exp();
    let m_density = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let wide: Vec<Point> = (0..8 * nr)
        .flat_map(|i| {
            let t = y - 2.0 + 4.0 * (i as f64 + 0.37) / (8 * nr) as f64;
            (0..nth).step_by(4).map(move |j| Point::new(t, (j as f64 + 0.29) * dth))
        })
        .collect();
    let m_upper = wide
        .par_iter()
        .filter_map(|z| Some(g.log_eval(z).ok()?.logmag() - w.psi(z.logr)))
        .reduce(|| f64::NEG_INFINITY, f64::max)
        .exp();
    let m_separation = rho / min_root_gap(&blocks);
    let m = m_two_sided.max(m_upper).max(m_separation).max(m_density);
    let report = QReport {
        a_param: a,
        y,
        r,
        tau,
        rho,
        log_scale,
        k,
        blocks,
        spacing_b,
        k_tau_b,
        root_spread,
        m_two_sided,
        m_upper,
        m_separation,
        m_density,
        m,
        samples: samples.len() + wide.len(),
    };
    Ok((r, g, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_weight() {
        let w = Weight::power(2.0).unwrap();
        let (r, g, rep) = build_q(&w, 8.0).unwrap();
        assert_eq!(r, rep.y.exp());
        assert!(rep.m <= 100.0, "{rep:?}");
        assert!(rep.root_spread <= 16.0, "{rep:?}");
        assert!(rep.k_tau_b <= 3.0 && rep.spacing_b <= 3.0, "{} {}", rep.k_tau_b, rep.spacing_b);
        assert_eq!(g.prefactor.1, rep.k);
        // zeros counted once per block
        assert_eq!(g.roots().len(), rep.blocks.iter().map(|b| b.1).sum::<usize>());
    }

    #[test]
    fn separation_is_stable_in_a() {
        let w = Weight::power(2.0).unwrap();
        let gaps: Vec<f64> = [4.0, 8.0, 12.0].iter().map(|&a| build_q(&w, a).unwrap().2.m_separation).collect();
        assert!(gaps.iter().all(|&g| g < 10.0), "{gaps:?}");
    }

    #[test]
    fn gap_helper() {
        // radii 1 and 2 with 4 zeros each: the radial gap 1 is below the in-circle gap √2
        let b = [(0.0, 4), (2f64.ln(), 4)];
        assert!((min_root_gap(&b) - 1.0).abs() < 1e-12);
        let b = [(0.0, 8), (10f64.ln(), 2)];
        assert!((min_root_gap(&b) - 2.0 * (PI / 8.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn refuses_slow_weights() {
        let w = Weight::custom("t^2", |t| t * t);
        assert!(matches!(build_q(&w, 4.0), Err(Error::Regime(_))));
    }
}
