//! The Hilbert-transform functional `ρ²(R) Σ_{|λ−R|<Nρ} 1/|z−λ|²`, whose infimum over the disc
//! `|z − R| < (N+1)ρ` must stay bounded if the normalized kernels at `Λ` form a Riesz basis.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::kernels::{Point, PointSet};
use crate::{Complex, Error, Result};

/// Square lattice of the given spacing, offset by half a cell from `center`, clipped to the disc
/// of the given radius around `center`.
pub fn square_lattice(center: Complex, spacing: f64, radius: f64) -> Result<PointSet> {
    if !(spacing > 0.0 && radius > 0.0) {
        return Err(Error::Invalid(format!("lattice spacing {spacing} and radius {radius} must be positive")));
    }
    let m = (radius / spacing).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            let off = Complex::new((i as f64 + 0.5) * spacing, (j as f64 + 0.5) * spacing);
            if off.norm() < radius {
                pts.push(Point::from_complex(center + off));
            }
        }
    }
    PointSet::new(pts, format!("square lattice, spacing {spacing}"))
}

/// `ρ² Σ_{|λ − center| < Nρ} 1/|z − λ|²`.
pub fn obstruction_value(points: &[Complex], center: Complex, rho: f64, n: f64, z: Complex) -> f64 {
    let reach = n * rho;
    rho * rho * points.iter().filter(|l| (**l - center).norm() < reach).map(|l| 1.0 / (z - *l).norm_sqr()).sum::<f64>()
}

/// `∫_{ρ<|ζ|<Nρ} dm(ζ)/|z−ζ|²` for `|z|` outside `[ρ, Nρ]`, by the circle mean
/// `∫_0^{2π} dθ/|z − re^{iθ}|² = 2π/|r² − |z|²|`.
pub fn annulus_integral(rho: f64, n: f64, z_abs: f64) -> Result<f64> {
    let (a, b) = (rho, n * rho);
    let s = z_abs * z_abs;
    if z_abs >= a && z_abs <= b {
        return Err(Error::Precondition("the integral diverges for z inside the annulus".into()));
    }
    // ∫ 2π r dr / |r² − s| = π |ln|r² − s||
    Ok(PI * ((b * b - s).abs().ln() - (a * a - s).abs().ln()).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionRow {
    pub n: usize,
    pub inf: f64,
    pub argmin: (f64, f64),
    pub points_used: usize,
    pub grid_points: usize,
    /// `2π log N`, the integral lower bound at the centre.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub r: f64,
    pub a: f64,
    pub rho: f64,
    pub rows: Vec<ObstructionRow>,
    /// Minimal pairwise distance over `ρ` among the points used.
    pub beta_sep: f64,
    /// `ρ` over the covering radius of the disc `|z − R| < N_max ρ`.
    pub beta_den: f64,
    /// Least-squares fit `inf ≈ slope·log N + intercept`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub pass: bool,
}

pub const OBSTRUCTION_MIN_R2: f64 = 0.9;

/// Least-squares line through `(x, y)`: slope, intercept, R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Infimum of the functional on a `ρ/8` grid over `|z − R| < (N+1)ρ` for each `N`, centred at
/// the real point `R`.
pub fn obstruction_functional(ps: &PointSet, r: f64, a: f64, rho: f64, ns: &[usize]) -> Result<ObstructionReport> {
    if !(r > 0.0 && a > 0.0 && rho > 0.0) || ns.len() < 2 || ns.iter().any(|&n| n == 0) {
        return Err(Error::Precondition(format!("degenerate annulus R = {r}, A = {a}, rho = {rho}, N = {ns:?}")));
    }
    let center = Complex::new(r, 0.0);
    let n_max = *ns.iter().max().unwrap() as f64;
    let pts: Vec<Complex> =
        ps.points.iter().map(Point::to_complex).filter(|l| (*l - center).norm() < (n_max + 1.0) * rho).collect();
    let step = rho / 8.0;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let nf = n as f64;
        let used: Vec<Complex> = pts.iter().copied().filter(|l| (*l - center).norm() < nf * rho).collect();
        if used.is_empty() {
            return Err(Error::Precondition(format!("no points within {n}ρ of R")));
        }
        let reach = (nf + 1.0) * rho;
        let m = (reach / step).ceil() as i64;
        let grid: Vec<Complex> = (-m..=m)
            .flat_map(|i| (-m..=m).map(move |j| center + Complex::new(i as f64 * step, j as f64 * step)))
            .filter(|z| (*z - center).norm() < reach)
            .collect();
        let best = grid
            .par_iter()
            .map(|&z| (rho * rho * used.iter().map(|l| 1.0 / (z - *l).norm_sqr()).sum::<f64>(), z))
            .reduce(|| (f64::INFINITY, center), |x, y| if y.0 < x.0 || (y.0 == x.0 && (y.1.re, y.1.im) < (x.1.re, x.1.im)) { y } else { x });
        rows.push(ObstructionRow {
            n,
            inf: best.0,
            argmin: (best.1.re - r, best.1.im),
            points_used: used.len(),
            grid_points: grid.len(),
            reference: 2.0 * PI * nf.ln(),
        });
    }
    let beta_sep = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| (*p - *q).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min)
        / rho;
    let inner = n_max * rho;
    let m = (inner / step).ceil() as i64;
    let cover = (-m..=m)
        .into_par_iter()
        .flat_map_iter(|i| (-m..=m).map(move |j| center + Complex::new(i as f64 * step, j as f64 * step)))
        .filter(|z| (*z - center).norm() < inner)
        .map(|z| pts.iter().map(|l| (z - *l).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.inf).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(ObstructionReport {
        r,
        a,
        rho,
        rows,
        beta_sep,
        beta_den: rho / cover,
        slope,
        intercept,
        r_squared,
        pass: slope > 0.0 && r_squared >= OBSTRUCTION_MIN_R2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let l = Complex::new(10.0, 0.0);
        let z = l + Complex::new(0.0, 0.7);
        assert!((obstruction_value(&[l], l, 0.7, 4.0, z) - 1.0).abs() < 1e-15);
        assert_eq!(obstruction_value(&[l], l + 3.0, 0.7, 4.0, z), 0.0);
    }

    #[test]
    fn translation_covariance() {
        let pts = [Complex::new(9.3, 0.4), Complex::new(10.2, -1.1), Complex::new(11.0, 0.9)];
        let c = Complex::new(10.0, 0.0);
        let z = Complex::new(10.05, 0.31);
        let v = obstruction_value(&pts, c, 1.0, 3.0, z);
        let s = Complex::new(-3.25, 7.5);
        let shifted: Vec<Complex> = pts.iter().map(|p| p + s).collect();
        let w = obstruction_value(&shifted, c + s, 1.0, 3.0, z + s);
        assert!((v - w).abs() <= 1e-12 * v);
    }

    #[test]
    fn annulus_integral_at_centre() {
        for n in [2.0, 4.0, 32.0] {
            assert!((annulus_integral(1.5, n, 0.0).unwrap() - 2.0 * PI * f64::ln(n)).abs() < 1e-12);
        }
        assert!(annulus_integral(1.0, 4.0, 2.0).is_err());
        // against a polar Riemann sum at |z| = 0.5
        let (rho, n, za) = (1.0, 3.0, 0.5);
        let (nr, nt) = (2000, 400);
        let mut acc = 0.0;
        for i in 0..nr {
            let r = rho + (n - 1.0) * rho * (i as f64 + 0.5) / nr as f64;
            for j in 0..nt {
                let th = 2.0 * PI * (j as f64 + 0.5) / nt as f64;
                acc += r / (Complex::new(za, 0.0) - Complex::from_polar(r, th)).norm_sqr();
            }
        }
        acc *= (n - 1.0) * rho / nr as f64 * 2.0 * PI / nt as f64;
        assert!((acc / annulus_integral(rho, n, za).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lattice_against_direct_oracle() {
        let c = Complex::new(200.0, 0.0);
        let ps = square_lattice(c, 1.0, 40.0).unwrap();
        let rep = obstruction_functional(&ps, 200.0, 200.0, 1.0, &[4, 8]).unwrap();
        // brute force at N = 4
        let pts: Vec<Complex> = ps.points.iter().map(|p| p.to_complex()).collect();
        let mut best = f64::INFINITY;
        for i in -40..=40 {
            for j in -40..=40 {
                let z = c + Complex::new(i as f64 / 8.0, j as f64 / 8.0);
                if (z - c).norm() < 5.0 {
                    let mut s = 0.0;
                    for l in &pts {
                        if (l - c).norm() < 4.0 {
                            s += 1.0 / (z - l).norm_sqr();
                        }
                    }
                    best = best.min(s);
                }
            }
        }
        assert!((rep.rows[0].inf - best).abs() <= 1e-12 * best);
        assert!((rep.beta_sep - 1.0).abs() < 1e-9);
        assert!(rep.beta_den > 0.5);
        assert!(rep.rows[1].inf > rep.rows[0].inf);
    }

    #[test]
    fn degenerate_inputs() {
        let ps = square_lattice(Complex::new(50.0, 0.0), 1.0, 5.0).unwrap();
        assert!(obstruction_functional(&ps, 50.0, 0.0, 1.0, &[2, 4]).is_err());
        assert!(obstruction_functional(&ps, 500.0, 8.0, 1.0, &[2, 4]).is_err());
    }

    #[test]
    fn fit() {
        let (s, b, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }
}
