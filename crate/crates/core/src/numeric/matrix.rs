use num_complex::Complex;
use thiserror::Error;

use super::Real;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    pub fn from_real(n: usize, vals: &[T]) -> Self {
        assert_eq!(vals.len(), n * n);
        Self::from_fn(n, |i, j| Complex::new(vals[i * n + j], T::zero()))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    /// Largest `|a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
    }

    /// Principal submatrix on the given index set, in order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    fn off_diagonal_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s = s + self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix is not Hermitian (max |a_ij - conj a_ji| = {0:e})")]
    NotHermitian(f64),
    #[error("Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

#[derive(Clone, Debug)]
pub struct Eigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: CMatrix<T>,
    pub sweeps: usize,
    /// Off-diagonal Frobenius norm left after the last sweep.
    pub residual: T,
}

const MAX_SWEEPS: usize = 80;

/// Full spectrum of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Pivots are visited in row-major order of the strict upper triangle, so the result is
/// deterministic. Each complex pivot `a_pq = r e^{iφ}` is first turned real by the phase
/// `diag(1, e^{−iφ})` and then annihilated by an ordinary plane rotation.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> Result<Eigen<T>, EigenError> {
    let n = a.dim();
    let scale = a.max_abs().max(T::min_positive_value());
    let defect = a.hermitian_defect();
    if defect > T::lit(1e-12) * scale.max(T::one()) {
        return Err(EigenError::NotHermitian(defect.as_f64()));
    }
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, T::zero());
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let target = T::epsilon() * T::lit(4.0) * m.frobenius();
    let mut sweeps = 0;
    loop {
        let off = m.off_diagonal_norm();
        if off <= target || n < 2 {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(EigenError::NoConvergence { sweeps, off: off.as_f64() });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Eigen { values, vectors, sweeps, residual: m.off_diagonal_norm() })
}

fn rotate<T: Real>(m: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if r <= T::epsilon() * T::lit(0.01) * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex::new(T::zero(), T::zero());
        m[(q, p)] = Complex::new(T::zero(), T::zero());
        return;
    }
    let phase = apq / r; // e^{iφ}
    let theta = (aqq - app) / (r + r);
    let t = {
        let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -t
        } else {
            t
        }
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    // U = [[c, s], [−s e^{−iφ}, c e^{−iφ}]] on coordinates (p, q)
    let ph = phase.conj();
    let u_pp = Complex::new(c, T::zero());
    let u_pq = Complex::new(s, T::zero());
    let u_qp = ph * (-s);
    let u_qq = ph * c;
    let n = m.dim();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, q)] = Complex::new(T::zero(), T::zero());
    m[(q, p)] = Complex::new(T::zero(), T::zero());
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Largest singular value, from the spectrum of `A^H A`.
pub fn largest_singular_value<T: Real>(a: &CMatrix<T>) -> Result<T, EigenError> {
    let gram = a.conj_transpose().matmul(a);
    let eig = hermitian_eigen(&gram)?;
    Ok(eig.values.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn two_by_two_closed_form() {
        let g = 0.5;
        let a = CMatrix::from_fn(2, |i, j| if i == j { C::new(1.0, 0.0) } else { C::new(g, 0.0) });
        let e = hermitian_eigen(&a).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-14);
        assert!((e.values[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn complex_off_diagonal() {
        // eigenvalues 1 ± |g| for any phase of g
        let g = C::from_polar(0.3, 1.1);
        let a = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => g,
            (1, 0) => g.conj(),
            _ => C::new(1.0, 0.0),
        });
        let e = hermitian_eigen(&a).unwrap();
        assert!((e.values[0] - 0.7).abs() < 1e-14 && (e.values[1] - 1.3).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_matrix() {
        let n = 6;
        let a = CMatrix::from_fn(n, |i, j| {
            let base = C::new(((i * 7 + j * 3) % 5) as f64, ((i as f64) - (j as f64)) * 0.37);
            if i == j {
                C::new(base.re + 2.0, 0.0)
            } else {
                base
            }
        });
        let a = CMatrix::from_fn(n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
        let e = hermitian_eigen(&a).unwrap();
        let lam = CMatrix::from_fn(n, |i, j| if i == j { C::new(e.values[i], 0.0) } else { C::new(0.0, 0.0) });
        let back = e.vectors.matmul(&lam).matmul(&e.vectors.conj_transpose());
        for i in 0..n {
            for j in 0..n {
                assert!((back[(i, j)] - a[(i, j)]).norm() < 1e-12);
            }
        }
        let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_real(2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(hermitian_eigen(&a), Err(EigenError::NotHermitian(_))));
    }

    #[test]
    fn singular_value_of_diagonal() {
        let a = CMatrix::<f64>::from_real(3, &[1.0, 0.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 2.0]);
        assert!((largest_singular_value(&a).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn f32_instantiation() {
        let a = CMatrix::<f32>::from_real(2, &[2.0, 1.0, 1.0, 2.0]);
        let e = hermitian_eigen(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-5 && (e.values[1] - 3.0).abs() < 1e-5);
    }
}
