//! Minimal sup-norm distance from a sequence to the cone of convex sequences.
//!
//! For `i < j < k` convexity forces `v_j ≤ λ v_i + (1−λ) v_k`, so any feasible defect satisfies
//! `2d ≥ x_j − λ x_i − (1−λ) x_k`. The lower convex hull attains the largest of these three-point
//! bounds, and `v = hull(x) + d` is feasible with that `d`. The linear program is therefore solved
//! exactly by one hull pass; the binding triple is returned as the certificate.

use serde::Serialize;

use super::Real;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexFit<T> {
    pub defect: T,
    /// An optimal convex sequence: `|x_n − v_n| ≤ defect` for all n.
    pub fitted: Vec<T>,
    /// Indices `(i, j, k)` of the binding three-point constraint, when the defect is positive.
    pub witness: Option<(usize, usize, usize)>,
}

/// Vertex indices of the lower convex hull of `(n, x_n)`.
fn lower_hull<T: Real>(x: &[T]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        while hull.len() >= 2 {
            let i = hull[hull.len() - 2];
            let j = hull[hull.len() - 1];
            // drop j when it lies on or above the chord from i to k
            let lhs = (x[j] - x[i]) * T::from_usize_lossy(k - i);
            let rhs = (x[k] - x[i]) * T::from_usize_lossy(j - i);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

pub fn convex_fit<T: Real>(x: &[T]) -> ConvexFit<T> {
    if x.len() < 3 {
        return ConvexFit { defect: T::zero(), fitted: x.to_vec(), witness: None };
    }
    let hull = lower_hull(x);
    let mut envelope = vec![T::zero(); x.len()];
    let mut best = (T::zero(), None);
    for w in hull.windows(2) {
        let (i, k) = (w[0], w[1]);
        let span = T::from_usize_lossy(k - i);
        for j in i..=k {
            let lam = T::from_usize_lossy(k - j) / span;
            envelope[j] = lam * x[i] + (T::one() - lam) * x[k];
            let gap = x[j] - envelope[j];
            if gap > best.0 {
                best = (gap, Some((i, j, k)));
            }
        }
    }
    let defect = best.0 * T::lit(0.5);
    let fitted = envelope.iter().map(|&e| e + defect).collect();
    ConvexFit { defect, fitted, witness: best.1 }
}

/// `min_{v convex} max_n |x_n − v_n|`; zero for sequences shorter than three.
pub fn convex_fit_defect<T: Real>(x: &[T]) -> T {
    convex_fit(x).defect
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(convex_fit_defect(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(convex_fit_defect(&[0.0, 1.0, 0.0]), 0.5);
        assert_eq!(convex_fit_defect(&[0.0, 1.0, 2.0, 3.0]), 0.0);
        assert_eq!(convex_fit_defect(&[5.0, -1.0]), 0.0);
    }

    #[test]
    fn fitted_sequence_is_feasible() {
        let x: [f64; 7] = [0.3, 1.2, -0.4, 2.0, 0.1, 0.0, 3.3];
        let fit = convex_fit(&x);
        for (a, b) in x.iter().zip(&fit.fitted) {
            assert!((a - b).abs() <= fit.defect + 1e-12);
        }
        for w in fit.fitted.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
        let (i, j, k) = fit.witness.unwrap();
        assert!(i < j && j < k);
    }
}
