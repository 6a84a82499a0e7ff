use serde::Serialize;

use super::Weight;
use crate::{Error, Result};

/// Continuous piecewise-linear `ℓ` with `ℓ' = 2n + 2` on `(y_n, y_{n+1})`, anchored at
/// `ℓ(y_0) = ψ(y_0)`. Below `y_0` it is constant; beyond the last knot `y_N` the slope stays
/// `2N + 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompanionEll {
    pub knots: Vec<f64>,
    /// `ℓ(y_n)`.
    pub values: Vec<f64>,
    pub sandwich: SandwichReport,
}

/// Empirical constants in `ℓ ≤ ψ + C_1` and `ψ ≤ ℓ + 2t + C_2` on a grid over `[y_0, y_N]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    /// `sup (ℓ − ψ)`.
    pub upper: f64,
    /// `sup (ψ − ℓ − 2t)`.
    pub lower: f64,
    pub grid_points: usize,
}

const GRID_PER_SEGMENT: usize = 64;

impl CompanionEll {
    pub fn eval(&self, t: f64) -> f64 {
        let y = &self.knots;
        if t <= y[0] {
            return self.values[0];
        }
        let n = match y.partition_point(|&k| k <= t) {
            0 => 0,
            p => p - 1,
        };
        self.values[n] + self.slope_index(n) * (t - y[n])
    }

    /// `ℓ'` on `(y_n, y_{n+1})`.
    pub fn slope_index(&self, n: usize) -> f64 {
        (2 * n + 2) as f64
    }

    pub fn slope(&self, t: f64) -> f64 {
        if t < self.knots[0] {
            0.0
        } else {
            self.slope_index(self.knots.partition_point(|&k| k <= t) - 1)
        }
    }
}

pub fn companion_ell(w: &Weight, ys: &[f64]) -> Result<CompanionEll> {
    if ys.is_empty() {
        return Err(Error::Invalid("companion ell needs at least one knot".into()));
    }
    if let Some(i) = ys.windows(2).position(|p| !(p[1] > p[0])) {
        return Err(Error::Constraint { index: i + 1, what: "knots must increase strictly".into() });
    }
    let mut values = Vec::with_capacity(ys.len());
    values.push(w.psi(ys[0]));
    for n in 1..ys.len() {
        values.push(values[n - 1] + (2 * n) as f64 * (ys[n] - ys[n - 1]));
    }
    let mut ell = CompanionEll {
        knots: ys.to_vec(),
        values,
        sandwich: SandwichReport { upper: f64::NEG_INFINITY, lower: f64::NEG_INFINITY, grid_points: 0 },
    };
    let mut report = ell.sandwich;
    let mut visit = |t: f64| {
        let (l, p) = (ell.eval(t), w.psi(t));
        report.upper = report.upper.max(l - p);
        report.lower = report.lower.max(p - l - 2.0 * t);
        report.grid_points += 1;
    };
    if ys.len() == 1 {
        visit(ys[0]);
    }
    for p in ys.windows(2) {
        for k in 0..GRID_PER_SEGMENT {
            visit(p[0] + (p[1] - p[0]) * k as f64 / GRID_PER_SEGMENT as f64);
        }
    }
    if ys.len() > 1 {
        visit(ys[ys.len() - 1]);
    }
    ell.sandwich = report;
    Ok(ell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_and_slopes() {
        let w = Weight::custom("t^2", |t| t * t);
        let ys: Vec<f64> = (0..30).map(|n| (n + 1) as f64).collect();
        let ell = companion_ell(&w, &ys).unwrap();
        assert_eq!(ell.eval(ys[0]), w.psi(ys[0]));
        for n in 0..ys.len() - 1 {
            let mid = 0.5 * (ys[n] + ys[n + 1]);
            assert_eq!(ell.slope(mid), (2 * n + 2) as f64);
            let l = ell.eval(ys[n + 1]);
            let r = ell.eval(ys[n + 1] - 1e-9);
            assert!((l - r).abs() < 1e-6);
        }
        assert_eq!(ell.eval(-5.0), ell.eval(ys[0]));
    }

    #[test]
    fn sandwich_against_scan() {
        let w = Weight::custom("t^2", |t| t * t);
        let ys: Vec<f64> = (0..21).map(|n| (n + 1) as f64).collect();
        let ell = companion_ell(&w, &ys).unwrap();
        // independent scan: ℓ on [n+1, n+2] is 1 + n(n+1) + (2n+2)(t − n − 1)
        let oracle = |t: f64| {
            let n = (t - 1.0).floor().clamp(0.0, 19.0);
            1.0 + n * (n + 1.0) + (2.0 * n + 2.0) * (t - n - 1.0)
        };
        let mut sup = f64::NEG_INFINITY;
        for k in 0..=20_000 {
            let t = 1.0 + 20.0 * k as f64 / 20_000.0;
            assert!((ell.eval(t) - oracle(t)).abs() < 1e-9);
            sup = sup.max(t * t - oracle(t) - 2.0 * t);
        }
        assert!(ell.sandwich.lower.is_finite());
        assert!(ell.sandwich.lower <= sup + 1e-9);
        assert!((ell.sandwich.lower - sup).abs() < 0.05);
    }

    #[test]
    fn rejects_unsorted_knots() {
        let w = Weight::power(1.0).unwrap();
        assert!(companion_ell(&w, &[1.0, 1.0]).is_err());
    }
}
