//! Dense matrices and the symmetric Jacobi eigensolver shared by the spectral
//! PCA and the patch-covariance filter design.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix element count",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| crate::scalar::dot(self.row(i), v))
            .collect()
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        crate::scalar::dot(x, &self.mul_vec(x))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in nonincreasing order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
    pub sweeps: usize,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn vector(&self, i: usize) -> Vec<T> {
        self.vectors.column(i)
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.values.len();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }
}

/// How the Jacobi rotations are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobiOrdering {
    /// Pick automatically by matrix order.
    Auto,
    /// Classic cyclic-by-rows sweep, one rotation at a time.
    Cyclic,
    /// Round-robin sweep: each round applies n/2 disjoint rotations as one
    /// block, with row passes spread over the rayon pool.
    Blocked,
}

/// Matrices at least this large use the blocked ordering under `Auto`.
pub const BLOCKED_JACOBI_MIN_ORDER: usize = 256;
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `T::jacobi_tolerance() * ‖A‖_F`. Eigenpairs are sorted by descending
/// eigenvalue and each eigenvector's largest-magnitude entry is made positive
/// (first such entry on ties).
pub fn symmetric_eigen<T: Real>(matrix: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    symmetric_eigen_with(matrix, JacobiOrdering::Auto)
}

pub fn symmetric_eigen_with<T: Real>(
    matrix: &Matrix<T>,
    ordering: JacobiOrdering,
) -> Result<SymmetricEigen<T>> {
    let n = matrix.rows();
    if n != matrix.cols() {
        return Err(Error::InvalidArgument(format!(
            "eigensolver needs a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("eigensolver got an empty matrix".into()));
    }
    if matrix.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let norm = matrix.frobenius_norm();
    let sym_tol = T::jacobi_tolerance() * T::lit(100.0) * norm.max(T::one());
    let asym = matrix.asymmetry();
    if asym > sym_tol {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {asym})"
        )));
    }

    let mut a = matrix.clone();
    // Average the two triangles so that rotations see an exactly symmetric input.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (a[(i, j)] + a[(j, i)]) / T::lit(2.0);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = T::jacobi_tolerance() * norm;

    let ordering = match ordering {
        JacobiOrdering::Auto if n >= BLOCKED_JACOBI_MIN_ORDER => JacobiOrdering::Blocked,
        JacobiOrdering::Auto => JacobiOrdering::Cyclic,
        other => other,
    };

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps (order {n})"
            )));
        }
        match ordering {
            JacobiOrdering::Blocked => blocked_sweep(&mut a, &mut v),
            _ => cyclic_sweep(&mut a, &mut v),
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap().then(i.cmp(&j)));
    let values: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_sign(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, dst)] = x;
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Flip `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// `(c, s)` of the rotation annihilating `a_pq`.
#[inline]
fn rotation<T: Real>(app: T, aqq: T, apq: T) -> Option<(T, T, T)> {
    if apq == T::zero() {
        return None;
    }
    let two = T::lit(2.0);
    let tau = (aqq - app) / (two * apq);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    Some((c, t * c, t))
}

fn cyclic_sweep<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>) {
    let n = a.rows();
    for p in 0..n.saturating_sub(1) {
        for q in (p + 1)..n {
            let apq = a[(p, q)];
            let Some((c, s, t)) = rotation(a[(p, p)], a[(q, q)], apq) else {
                continue;
            };
            for k in 0..n {
                if k == p || k == q {
                    continue;
                }
                let akp = a[(k, p)];
                let akq = a[(k, q)];
                let new_kp = c * akp - s * akq;
                let new_kq = s * akp + c * akq;
                a[(k, p)] = new_kp;
                a[(p, k)] = new_kp;
                a[(k, q)] = new_kq;
                a[(q, k)] = new_kq;
            }
            a[(p, p)] = a[(p, p)] - t * apq;
            a[(q, q)] = a[(q, q)] + t * apq;
            a[(p, q)] = T::zero();
            a[(q, p)] = T::zero();
            for k in 0..n {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
}

/// Round-robin (circle method) pairings: `m - 1` rounds of disjoint pairs
/// covering every unordered pair of `0..n` once. Odd `n` gets a bye slot.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + n % 2;
    let mut players: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m - 1);
    for _ in 0..m - 1 {
        let mut pairs = Vec::with_capacity(m / 2);
        for i in 0..m / 2 {
            let (x, y) = (players[i], players[m - 1 - i]);
            if x < n && y < n {
                pairs.push((x.min(y), x.max(y)));
            }
        }
        rounds.push(pairs);
        players[1..].rotate_right(1);
    }
    rounds
}

/// Applies the column rotations of one round to every row of `m`.
fn rotate_columns<T: Real>(m: &mut Matrix<T>, rots: &[(usize, usize, T, T)]) {
    let cols = m.cols;
    m.data.par_chunks_mut(cols).for_each(|row| {
        for &(p, q, c, s) in rots {
            let xp = row[p];
            let xq = row[q];
            row[p] = c * xp - s * xq;
            row[q] = s * xp + c * xq;
        }
    });
}

fn blocked_sweep<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>) {
    let n = a.rows();
    for round in round_robin(n) {
        let rots: Vec<(usize, usize, T, T)> = round
            .iter()
            .filter_map(|&(p, q)| {
                rotation(a[(p, p)], a[(q, q)], a[(p, q)]).map(|(c, s, _)| (p, q, c, s))
            })
            .collect();
        if rots.is_empty() {
            continue;
        }
        // A J, then (A J)ᵀ J = Jᵀ A J since A is symmetric.
        rotate_columns(a, &rots);
        *a = parallel_transpose(a);
        rotate_columns(a, &rots);
        for &(p, q, _, _) in &rots {
            a[(p, q)] = T::zero();
            a[(q, p)] = T::zero();
        }
        rotate_columns(v, &rots);
    }
}

fn parallel_transpose<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    let (rows, cols) = (m.rows, m.cols);
    let mut data = vec![T::zero(); rows * cols];
    data.par_chunks_mut(rows).enumerate().for_each(|(j, out)| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = m.data[i * cols + j];
        }
    });
    Matrix {
        rows: cols,
        cols: rows,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &Matrix<f64>, eig: &SymmetricEigen<f64>, i: usize) -> f64 {
        let v = eig.vector(i);
        let av = m.mul_vec(&v);
        av.iter()
            .zip(&v)
            .map(|(a, x)| (a - eig.values[i] * x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn pseudo_random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = next();
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix() {
        let m = Matrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![2.0, 1.0]);
        assert_eq!(eig.vector(0), vec![1.0, 0.0]);
        assert_eq!(eig.vector(1), vec![0.0, 1.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        // λ² - 4λ + 3 = 0 → 3, 1.
        let m = Matrix::<f64>::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let v0 = eig.vector(0);
        let v1 = eig.vector(1);
        assert!((v0[0] - h).abs() < 1e-14 && (v0[1] - h).abs() < 1e-14);
        // (1,-1)/√2: tie in magnitude, first entry is made positive.
        assert!((v1[0] - h).abs() < 1e-14 && (v1[1] + h).abs() < 1e-14);
    }

    #[test]
    fn random_residuals_both_orderings() {
        for (n, seed) in [(10, 1), (17, 2), (33, 3)] {
            let m = pseudo_random_symmetric(n, seed);
            let norm = m.frobenius_norm();
            for ordering in [JacobiOrdering::Cyclic, JacobiOrdering::Blocked] {
                let eig = symmetric_eigen_with(&m, ordering).unwrap();
                for i in 0..n {
                    assert!(residual(&m, &eig, i) < 1e-8 * norm, "n={n} {ordering:?} i={i}");
                }
                for w in eig.values.windows(2) {
                    assert!(w[0] >= w[1]);
                }
                let vtv = eig.vectors.transpose().matmul(&eig.vectors);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((vtv[(i, j)] - expect).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn orderings_agree() {
        let m = pseudo_random_symmetric(24, 9);
        let a = symmetric_eigen_with(&m, JacobiOrdering::Cyclic).unwrap();
        let b = symmetric_eigen_with(&m, JacobiOrdering::Blocked).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
        for i in 0..24 {
            for (x, y) in a.vector(i).iter().zip(b.vector(i)) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(symmetric_eigen(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_matrix_needs_no_sweeps() {
        let eig = symmetric_eigen(&Matrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(eig.sweeps, 0);
        assert!(eig.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_robin_covers_all_pairs_once() {
        for n in [2, 3, 7, 8] {
            let mut seen = std::collections::HashSet::new();
            for round in round_robin(n) {
                let mut used = std::collections::HashSet::new();
                for (p, q) in round {
                    assert!(used.insert(p) && used.insert(q));
                    assert!(seen.insert((p, q)));
                }
            }
            assert_eq!(seen.len(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn single_precision() {
        let m = Matrix::from_vec(2, 2, vec![2.0f32, 1.0, 1.0, 2.0]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-5);
        assert!((eig.values[1] - 1.0).abs() < 1e-5);
    }
}
