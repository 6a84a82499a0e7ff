//! Gram matrices of normalized kernels and of the biorthogonal system `‖k_λ‖E_λ/E'(λ)`, their
//! extreme eigenvalues over nested finite sections, the circulant model for same-circle inner
//! products and the `‖B_n‖·R_n` scan.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::genfun::{coeff_inner, deflate, GenFun, GenFunKind, PolyCoeffs};
use crate::io::{fmt_f64, write_rows};
use crate::kernels::{gram_entry_with_norms, kernel_norm2, KernelStats, Point, PointSet};
use crate::moments::MomentTable;
use crate::numeric::{hermitian_eigen, largest_singular_value, Real, Scalar};
use crate::{CMatrix, Complex, Error, LogComplex, Result};

/// Hermitian Gram matrix `G_ij = e^{s_i + s_j} entries_ij`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub entries: CMatrix,
    pub log_scale: Vec<f64>,
    pub labels: Vec<String>,
    /// Largest relative truncation error among the kernel series used.
    pub max_truncation: f64,
    /// Entries computed through more than six digits of cancellation.
    pub cancelled: usize,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    /// The unscaled entry `G_ij` in the log domain.
    pub fn entry(&self, i: usize, j: usize) -> LogComplex {
        LogComplex::from_complex(self.entries[(i, j)]).scale_log(self.log_scale[i] + self.log_scale[j])
    }

    /// Leading `k × k` section.
    pub fn section(&self, k: usize) -> GramMatrix {
        self.select(&(0..k).collect::<Vec<_>>())
    }

    /// Rows and columns `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> GramMatrix {
        GramMatrix {
            entries: self.entries.submatrix(idx),
            log_scale: idx.iter().map(|&i| self.log_scale[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            max_truncation: self.max_truncation,
            cancelled: self.cancelled,
        }
    }

    /// Scaled entries as `row, col, re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim();
        let rows = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
            let v = self.entries[(i, j)];
            vec![i.to_string(), j.to_string(), fmt_f64(v.re), fmt_f64(v.im)]
        });
        write_rows(out, &["row", "col", "re", "im"], rows)
    }

    /// Per-index log-scales `s_i` with point labels.
    pub fn write_scale_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.log_scale.iter().zip(&self.labels).enumerate().map(|(i, (s, l))| vec![i.to_string(), fmt_f64(*s), l.clone()]);
        write_rows(out, &["index", "log_scale", "label"], rows)
    }
}

fn labels(ps: &PointSet) -> Vec<String> {
    (0..ps.len()).map(|i| format!("{}[{i}]", ps.label)).collect()
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Gram matrix of the normalized kernels `k_λ/‖k_λ‖`.
pub fn assemble_kernel_gram(tab: &MomentTable, ps: &PointSet) -> Result<GramMatrix> {
    let stats: Vec<KernelStats> = ps.points.par_iter().map(|p| kernel_norm2(tab, p.logr)).collect::<Result<_>>()?;
    let n = ps.len();
    let vals: Vec<((usize, usize), Complex)> = upper_pairs(n)
        .into_par_iter()
        .map(|(i, j)| {
            let v = if i == j { Complex::new(1.0, 0.0) } else { gram_entry_with_norms(tab, &ps.points[i], &ps.points[j], &stats[i], &stats[j]) };
            ((i, j), v)
        })
        .collect();
    let mut entries = CMatrix::zeros(n);
    for ((i, j), v) in vals {
        entries[(i, j)] = v;
        entries[(j, i)] = v.conj();
    }
    Ok(GramMatrix {
        entries,
        log_scale: vec![0.0; n],
        labels: labels(ps),
        max_truncation: stats.iter().map(|s| s.tail_bound).fold(0.0, f64::max),
        cancelled: 0,
    })
}

/// Gram matrix of `‖k_λ‖E_λ/E'(λ)` over roots `λ` of `g`, with `E_λ = E/(z − λ)` expanded in
/// coefficients.
pub fn assemble_dual_gram(g: &GenFun, tab: &MomentTable, ps: &PointSet) -> Result<GramMatrix> {
    let coeffs = g.coefficients();
    let n = ps.len();
    let rows: Vec<(PolyCoeffs, LogComplex, f64)> = ps
        .points
        .par_iter()
        .map(|p| {
            let d = g.derivative_at_root(p)?;
            let e = deflate(&coeffs, LogComplex::from_polar_log(p.logr, p.theta))?.quotient;
            let k = kernel_norm2(tab, p.logr)?;
            // ‖k_λ‖ / E'(λ)
            Ok((e, d.recip().scale_log(0.5 * k.lognorm2.logmag()), k.tail_bound))
        })
        .collect::<Result<_>>()?;
    let raw: Vec<((usize, usize), (LogComplex, bool))> = upper_pairs(n)
        .into_par_iter()
        .map(|(i, j)| {
            let (ip, flag) = coeff_inner(&rows[i].0, &rows[j].0, tab)?;
            Ok(((i, j), (ip * rows[i].1 * rows[j].1.conj(), flag)))
        })
        .collect::<Result<_>>()?;
    let mut full = vec![LogComplex::zero(); n * n];
    let mut cancelled = 0;
    for ((i, j), (v, flag)) in raw {
        full[i * n + j] = v;
        full[j * n + i] = v.conj();
        cancelled += flag as usize;
    }
    let log_scale: Vec<f64> = (0..n).map(|i| 0.5 * full[i * n + i].logmag()).collect();
    let entries = CMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex::new(1.0, 0.0)
        } else {
            full[i * n + j].scale_log(-log_scale[i] - log_scale[j]).to_complex()
        }
    });
    Ok(GramMatrix {
        entries,
        log_scale,
        labels: labels(ps),
        max_truncation: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        cancelled,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Section {
    pub size: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    /// Condition numbers level off over the nested sections.
    Plateau,
    /// Condition numbers keep growing (or a section is singular).
    Diverging,
}

/// Condition growth from the middle to the last section above which the trend counts as diverging.
pub const TREND_FACTOR: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RieszReport {
    pub dim: usize,
    /// Eigenvalues are `e^{log_scale}` times `lambda_min`, `lambda_max`.
    pub log_scale: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub sweeps: usize,
    pub sections: Vec<Section>,
    pub trend: Option<Trend>,
}

fn condition(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Extreme eigenvalues of the whole matrix.
pub fn riesz_bounds(g: &GramMatrix) -> Result<RieszReport> {
    let n = g.dim();
    if n == 0 {
        return Err(Error::Invalid("empty Gram matrix".into()));
    }
    let top = g.log_scale.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = CMatrix::from_fn(n, |i, j| g.entries[(i, j)] * (g.log_scale[i] + g.log_scale[j] - 2.0 * top).exp());
    let eig = hermitian_eigen(&m)?;
    let (lo, hi) = (eig.values[0], eig.values[n - 1]);
    Ok(RieszReport {
        dim: n,
        log_scale: 2.0 * top,
        lambda_min: lo,
        lambda_max: hi,
        condition: condition(lo, hi),
        sweeps: eig.sweeps,
        sections: vec![Section { size: n, lambda_min: lo, lambda_max: hi, condition: condition(lo, hi) }],
        trend: None,
    })
}

/// Bounds for the leading sections of the given sizes, checking Cauchy interlacing between
/// consecutive sections and classifying the condition-number trend.
pub fn nested_riesz(g: &GramMatrix, sizes: &[usize]) -> Result<RieszReport> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[sizes.len() - 1] > g.dim() || sizes[0] == 0 {
        return Err(Error::Invalid(format!("section sizes {sizes:?} must increase within 1..={}", g.dim())));
    }
    let reports: Vec<RieszReport> = sizes.par_iter().map(|&k| riesz_bounds(&g.section(k))).collect::<Result<_>>()?;
    // bring every section to the scale of the last one
    let base = reports[reports.len() - 1].log_scale;
    let sections: Vec<Section> = reports
        .iter()
        .map(|r| {
            let f = (r.log_scale - base).exp();
            Section { size: r.dim, lambda_min: r.lambda_min * f, lambda_max: r.lambda_max * f, condition: r.condition }
        })
        .collect();
    for (i, w) in sections.windows(2).enumerate() {
        let tol = 1e-10 * w[1].lambda_max.abs().max(1.0);
        if w[1].lambda_min > w[0].lambda_min + tol || w[1].lambda_max < w[0].lambda_max - tol {
            return Err(Error::Constraint { index: i + 1, what: "nested sections violate eigenvalue interlacing".into() });
        }
    }
    let last = sections[sections.len() - 1];
    let mid = sections[(sections.len() - 1) / 2];
    let trend = if !last.condition.is_finite() || last.condition > TREND_FACTOR * mid.condition { Trend::Diverging } else { Trend::Plateau };
    let full = &reports[reports.len() - 1];
    Ok(RieszReport { sections, trend: Some(trend), ..full.clone() })
}

/// `a_s = 1/(2s+n+1) + 1/(3n−2s−2)` for `0 ≤ s < n`; exact for rational scalars.
pub fn circulant_coefficients<S: Scalar>(n: usize) -> Vec<S> {
    let n = n as i64;
    (0..n).map(|s| S::one() / S::from_i64(2 * s + n + 1) + S::one() / S::from_i64(3 * n - 2 * s - 2)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CirculantReport<T> {
    pub n: usize,
    pub a: Vec<T>,
    /// `n·a_q`, the eigenvalues by the discrete Fourier identity.
    pub eigs: Vec<T>,
    pub opnorm: T,
    /// Ascending eigenvalues of the explicit matrix `b_jk = Σ_s e^{2πi(j−k)s/n} a_s`.
    pub dense_eigs: Vec<T>,
    /// Largest gap between the two spectra, after sorting.
    pub max_mismatch: T,
}

pub fn circulant_analysis<T: Real + Scalar>(n: usize) -> Result<CirculantReport<T>> {
    if n == 0 {
        return Err(Error::Invalid("circulant size must be positive".into()));
    }
    let a: Vec<T> = circulant_coefficients(n);
    let nf = T::from_usize_lossy(n);
    let eigs: Vec<T> = a.iter().map(|&x| nf * x).collect();
    let opnorm = eigs.iter().fold(T::zero(), |m, &e| m.max(e.abs()));
    let two_pi_n = T::lit(2.0) * T::PI() / nf;
    let entry = |j: usize, k: usize| {
        let d = (j as i64 - k as i64).rem_euclid(n as i64) as usize;
        a.iter().enumerate().fold(num_complex::Complex::new(T::zero(), T::zero()), |acc, (s, &v)| {
            // reduce (d·s) mod n before scaling so the angle stays exact
            let ang = two_pi_n * T::from_usize_lossy((d * s) % n);
            acc + num_complex::Complex::from_polar(v, ang)
        })
    };
    let b = crate::numeric::CMatrix::from_fn(n, |j, k| if j <= k { entry(j, k) } else { entry(k, j).conj() });
    let dense_eigs = hermitian_eigen(&b)?.values;
    let mut sorted = eigs.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let max_mismatch = sorted.iter().zip(&dense_eigs).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
    Ok(CirculantReport { n, a, eigs, opnorm, dense_eigs, max_mismatch })
}

/// Circulant-model value of `⟨E_λ, E_μ⟩` for `λ = R e^{2πij/n}`, `μ = R e^{2πik/n}` on the `n`-th
/// circle: `(2π/R) Σ_s e^{2πi(j−k)s/n} a_s`.
pub fn circulant_prediction(n: usize, log_r: f64, j: usize, k: usize) -> Complex {
    let a: Vec<f64> = circulant_coefficients(n);
    let d = (j as i64 - k as i64).rem_euclid(n as i64) as usize;
    let sum: Complex = a.iter().enumerate().map(|(s, &v)| Complex::from_polar(v, 2.0 * PI * ((d * s) % n) as f64 / n as f64)).sum();
    sum * (2.0 * PI * (-log_r).exp())
}

/// Coefficient route limit on the product degree.
pub const BLOCK_DEGREE_LIMIT: usize = 1000;
/// Largest admissible max/min ratio of `‖B_n‖·R_n` over a scan.
pub const BLOCK_SPREAD_LIMIT: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockNorm {
    pub n: usize,
    pub log_r: f64,
    pub log_norm: f64,
    /// `‖B_n‖·R_n`.
    pub scaled: f64,
    pub cancelled: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockScan {
    pub rows: Vec<BlockNorm>,
    pub spread: f64,
    pub pass: bool,
}

/// `B_n = (⟨E_λ, E_μ⟩)` over the `n` roots on the circle `R_n`.
pub fn block_matrix(g: &GenFun, coeffs: &PolyCoeffs, tab: &MomentTable, n: usize) -> Result<(Vec<Vec<LogComplex>>, usize)> {
    let f = g.factors[n - 1];
    let es: Vec<PolyCoeffs> = (0..n)
        .into_par_iter()
        .map(|j| {
            let w: Point = f.root(j);
            Ok(deflate(coeffs, LogComplex::from_polar_log(w.logr, w.theta))?.quotient)
        })
        .collect::<Result<_>>()?;
    let vals: Vec<((usize, usize), (LogComplex, bool))> =
        upper_pairs(n).into_par_iter().map(|(i, j)| Ok(((i, j), coeff_inner(&es[i], &es[j], tab)?))).collect::<Result<_>>()?;
    let mut b = vec![vec![LogComplex::zero(); n]; n];
    let mut cancelled = 0;
    for ((i, j), (v, flag)) in vals {
        b[i][j] = v;
        b[j][i] = v.conj();
        cancelled += flag as usize;
    }
    Ok((b, cancelled))
}

pub fn block_norm_scan(g: &GenFun, tab: &MomentTable, range: RangeInclusive<usize>) -> Result<BlockScan> {
    if g.kind != GenFunKind::T3Product {
        return Err(Error::Invalid("block norms need a lacunary block product".into()));
    }
    if g.degree() > BLOCK_DEGREE_LIMIT {
        return Err(Error::Infeasible { size: g.degree(), limit: BLOCK_DEGREE_LIMIT });
    }
    if *range.start() == 0 || *range.end() > g.depth() {
        return Err(Error::Invalid(format!("circle range {range:?} outside 1..={}", g.depth())));
    }
    let coeffs = g.coefficients();
    let mut rows = Vec::new();
    for n in range {
        let (b, cancelled) = block_matrix(g, &coeffs, tab, n)?;
        let top = (0..n).map(|i| b[i][i].logmag()).fold(f64::NEG_INFINITY, f64::max);
        let m = CMatrix::from_fn(n, |i, j| b[i][j].scale_log(-top).to_complex());
        let sigma = largest_singular_value(&m)?;
        let log_r = g.factors[n - 1].root(0).logr;
        let log_norm = top + sigma.ln();
        rows.push(BlockNorm { n, log_r, log_norm, scaled: (log_norm + log_r).exp(), cancelled });
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.scaled), b.max(r.scaled)));
    let spread = hi / lo;
    Ok(BlockScan { rows, spread, pass: spread.is_finite() && spread <= BLOCK_SPREAD_LIMIT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{build_table, default_spec};
    use crate::weightlab::{LacunarySequence, Weight};
    use num_rational::Ratio;

    fn gaussian(n: usize) -> MomentTable {
        // h = r²: log m_n = ln π + ln n!
        let mut acc = PI.ln();
        let logm = (0..n)
            .map(|k| {
                if k > 0 {
                    acc += (k as f64).ln();
                }
                acc
            })
            .collect();
        MomentTable::from_logm(logm, "gaussian").unwrap()
    }

    #[test]
    fn kernel_grams() {
        let tab = gaussian(600);
        let one = PointSet::new(vec![Point::new(0.5, 0.0)], "one").unwrap();
        let g = assemble_kernel_gram(&tab, &one).unwrap();
        assert_eq!(g.entries[(0, 0)], Complex::new(1.0, 0.0));
        let r = riesz_bounds(&g).unwrap();
        assert_eq!((r.lambda_min, r.lambda_max), (1.0, 1.0));

        // |⟨k_z, k_w⟩| / ‖k_z‖‖k_w‖ = e^{−|z−w|²/2}
        let d = (2.0 * 2f64.ln()).sqrt();
        let two = PointSet::new(vec![Point::from_complex(Complex::new(1.0, 0.0)), Point::from_complex(Complex::new(1.0 + d, 0.0))], "two").unwrap();
        let g = assemble_kernel_gram(&tab, &two).unwrap();
        assert!((g.entries[(0, 1)].norm() - 0.5).abs() < 1e-9);
        let r = riesz_bounds(&g).unwrap();
        assert!((r.lambda_min - 0.5).abs() < 1e-9 && (r.lambda_max - 1.5).abs() < 1e-9);

        let far = PointSet::new(vec![Point::from_complex(Complex::new(2.0, 0.0)), Point::from_complex(Complex::new(2.0, 10.0))], "far").unwrap();
        let g = assemble_kernel_gram(&tab, &far).unwrap();
        assert!(g.entries[(0, 1)].norm() <= (-50.0f64).exp() * (1.0 + 1e-6));
    }

    #[test]
    fn kernel_gram_is_psd_and_permutation_invariant() {
        use rand::{Rng, SeedableRng};
        let tab = gaussian(800);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> = (0..25).map(|_| Point::from_complex(Complex::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))).collect();
        let ps = PointSet::new(pts, "random").unwrap();
        let g = assemble_kernel_gram(&tab, &ps).unwrap();
        assert!(g.entries.hermitian_defect() < 1e-12);
        let r = riesz_bounds(&g).unwrap();
        assert!(r.lambda_min >= -1e-8 && r.lambda_min <= 1.0 && r.lambda_max >= 1.0);
        let perm: Vec<usize> = (0..25).rev().collect();
        let p = riesz_bounds(&g.select(&perm)).unwrap();
        assert!((p.lambda_min - r.lambda_min).abs() < 1e-10 && (p.lambda_max - r.lambda_max).abs() < 1e-10);
        let nested = nested_riesz(&g, &[5, 10, 15, 20, 25]).unwrap();
        assert_eq!(nested.sections.len(), 5);
        for w in nested.sections.windows(2) {
            assert!(w[1].lambda_min <= w[0].lambda_min + 1e-10 && w[1].lambda_max >= w[0].lambda_max - 1e-10);
        }
    }

    #[test]
    fn dual_gram_single_root() {
        let w = Weight::power(2.0).unwrap();
        let tab = build_table(&w, 80, &default_spec()).unwrap();
        let y = 0.8;
        let g = GenFun::t2_product(&[y]).unwrap();
        let ps = PointSet::new(vec![Point::new(y, 0.0)], "root").unwrap();
        let d = assemble_dual_gram(&g, &tab, &ps).unwrap();
        let k = kernel_norm2(&tab, y).unwrap().lognorm2.logmag();
        // E_λ = −1/λ, E'(λ) = −1/λ: the entry is m_0 ‖k_λ‖² λ²/λ² = m_0 ‖k_λ‖²
        let expect = tab.log_m(0) + k;
        assert!((d.entry(0, 0).logmag() - expect).abs() < 1e-12);
    }

    #[test]
    fn dual_gram_rejects_non_roots() {
        let w = Weight::power(2.0).unwrap();
        let tab = build_table(&w, 20, &default_spec()).unwrap();
        let g = GenFun::t2_product(&[0.8]).unwrap();
        let ps = PointSet::new(vec![Point::new(0.3, 0.0)], "x").unwrap();
        assert!(matches!(assemble_dual_gram(&g, &tab, &ps), Err(Error::NotARoot { .. })));
    }

    #[test]
    fn dual_gram_same_circle_pair_follows_circulant_model() {
        let seq = LacunarySequence::new(vec![2.0, 6.0, 20.0], crate::weightlab::SequenceOrigin::User).unwrap();
        let w = Weight::theorem3(seq.clone());
        let tab = build_table(&w, 60, &default_spec()).unwrap();
        let g = GenFun::t3_product(&seq, 3).unwrap();
        let pts: Vec<Point> = (0..2).map(|j| g.factors[2].root(j)).collect();
        let ps = PointSet::new(pts.clone(), "circle 3").unwrap();
        let d = assemble_dual_gram(&g, &tab, &ps).unwrap();
        assert!(d.entries.hermitian_defect() < 1e-12);
        // same circle: ‖k_λ‖ and |E'(λ)| agree, so the normalizer is ‖k‖²/|E'|²
        let k = kernel_norm2(&tab, pts[0].logr).unwrap().lognorm2.logmag();
        let e1 = g.derivative_at_root(&pts[0]).unwrap().logmag();
        let model = circulant_prediction(3, seq.log_r(3), 0, 1).norm().ln() + k - 2.0 * e1;
        let ratio = (d.entry(0, 1).logmag() - model).exp();
        assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn cross_circle_products_decay() {
        let seq = LacunarySequence::from_radii(&[2.0, 4.0, 16.0, 256.0, 65536.0]).unwrap();
        let w = Weight::theorem3(seq.clone());
        let tab = build_table(&w, 40, &default_spec()).unwrap();
        let g = GenFun::t3_product(&seq, 5).unwrap();
        let c = g.coefficients();
        let e = |n: usize| deflate(&c, LogComplex::from_polar_log(seq.log_r(n), 0.0)).unwrap().quotient;
        let e1 = e(1);
        let mut prev = f64::INFINITY;
        let mut scaled = Vec::new();
        for k in 2..=5 {
            let v = coeff_inner(&e1, &e(k), &tab).unwrap().0.logmag();
            assert!(v < prev);
            prev = v;
            scaled.push((v + seq.log_r(k) - ((k + 1) as f64).ln().ln()).exp());
        }
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 100.0, "{scaled:?}");
    }

    #[test]
    fn circulant_small_cases() {
        let a: Vec<Ratio<i64>> = circulant_coefficients(2);
        assert_eq!(a, vec![Ratio::new(7, 12), Ratio::new(7, 10)]);
        let a: Vec<Ratio<i64>> = circulant_coefficients(3);
        assert_eq!(a, vec![Ratio::new(11, 28), Ratio::new(11, 30), Ratio::new(11, 24)]);
        let r = circulant_analysis::<f64>(2).unwrap();
        assert!((r.opnorm - 1.4).abs() < 1e-15);
        let r = circulant_analysis::<f64>(3).unwrap();
        assert!((r.opnorm - 11.0 / 8.0).abs() < 1e-15);
        assert!(r.max_mismatch < 1e-12);
    }

    #[test]
    fn circulant_dense_cross_check() {
        for n in [1, 4, 7, 16, 33, 64] {
            let r = circulant_analysis::<f64>(n).unwrap();
            assert!(r.max_mismatch < 1e-10, "n = {n}: {}", r.max_mismatch);
            assert!(r.opnorm < 2.0);
        }
        let r = circulant_analysis::<f32>(8).unwrap();
        assert!(r.max_mismatch < 1e-4);
    }

    #[test]
    fn block_scan() {
        let seq = LacunarySequence::from_radii(&[2.0, 4.0, 16.0, 256.0, 65536.0]).unwrap();
        let w = Weight::theorem3(seq.clone());
        let tab = build_table(&w, 40, &default_spec()).unwrap();
        let g = GenFun::t3_product(&seq, 5).unwrap();
        let scan = block_norm_scan(&g, &tab, 1..=5).unwrap();
        assert!(scan.rows[0].log_norm.is_finite());
        let coeffs = g.coefficients();
        let (b1, _) = block_matrix(&g, &coeffs, &tab, 1).unwrap();
        let e = deflate(&coeffs, LogComplex::from_polar_log(seq.log_r(1), 0.0)).unwrap().quotient;
        let n2 = crate::genfun::coeff_norm2(&e, &tab).unwrap().logmag();
        assert!((b1[0][0].logmag() - n2).abs() < 1e-12);
        assert!((scan.rows[0].log_norm - n2).abs() < 1e-12);
        assert!(scan.pass, "{scan:?}");
        for n in 2..=5 {
            let (b, _) = block_matrix(&g, &coeffs, &tab, n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(b[i][j], b[j][i].conj());
                }
            }
        }
        let big = GenFun::t3_product(&LacunarySequence::squaring(50), 50).unwrap();
        assert!(matches!(block_norm_scan(&big, &tab, 1..=2), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn gram_csv() {
        let tab = gaussian(200);
        let ps = PointSet::new(vec![Point::new(0.0, 0.0), Point::new(0.5, 1.0)], "p").unwrap();
        let g = assemble_kernel_gram(&tab, &ps).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        g.write_csv(&mut a).unwrap();
        g.write_scale_csv(&mut b).unwrap();
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);
        assert!(String::from_utf8(b).unwrap().contains("p[1]"));
    }
}
