//! Small dense square matrices.
//!
//! Everything in this crate works on low-dimensional charts (a handful of
//! coordinates, a few dozen for long Gaussian chains), so a row-major `Vec`
//! with Gauss-Jordan inversion and cyclic Jacobi diagonalisation is all the
//! linear algebra needed.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Condition-number ceiling above which a metric is reported as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows do not form a square.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must form a square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(&a, &b)| a * b).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    fn norm_1(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// Fails with [`Error::SingularMatrix`] when the 1-norm condition number
    /// exceeds [`MAX_CONDITION`] (or what the scalar type can resolve).
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| {
                    a[(r, col)]
                        .abs()
                        .partial_cmp(&a[(s, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            let p = a[(pivot, col)];
            if p == T::zero() || !p.is_finite() {
                return Err(Error::SingularMatrix {
                    condition: f64::INFINITY,
                });
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let inv_p = T::one() / p;
            for j in 0..n {
                a[(col, j)] *= inv_p;
                inv[(col, j)] *= inv_p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= factor * ac;
                    inv[(r, j)] -= factor * ic;
                }
            }
        }
        let condition = self.norm_1() * inv.norm_1();
        let ceiling = T::lit(MAX_CONDITION).min(T::lit(0.01) / T::epsilon());
        if !condition.is_finite() || condition > ceiling {
            return Err(Error::SingularMatrix {
                condition: condition.to_f64().unwrap_or(f64::INFINITY),
            });
        }
        Ok(inv)
    }

    /// Inverse of `diag(d)`. Entrywise reciprocals are exact up to rounding, so
    /// only zero or non-finite entries are rejected.
    pub fn diagonal_inverse(diag: &[T]) -> Result<Self> {
        if diag.iter().any(|d| *d == T::zero() || !d.is_finite()) {
            return Err(Error::SingularMatrix {
                condition: f64::INFINITY,
            });
        }
        let inv: Vec<T> = diag.iter().map(|&d| T::one() / d).collect();
        Ok(Self::from_diagonal(&inv))
    }

    /// Solves `A x = b` through the inverse; matrices here are tiny.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(self.inverse()?.mul_vec(b))
    }

    /// True when a Cholesky factorisation succeeds, i.e. the (symmetric) matrix
    /// is positive definite.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return false;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        true
    }

    /// Eigenvalues of a symmetric matrix, ascending, by the cyclic Jacobi method.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let mut a = self.clone();
        let two = T::lit(2.0);
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            let scale: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum::<T>() + off;
            if off <= T::epsilon() * T::epsilon() * scale.max(T::min_positive_value()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig = a.diagonal();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        eig
    }

    fn swap_rows(&mut self, r: usize, s: usize) {
        for j in 0..self.n {
            self.data.swap(r * self.n + j, s * self.n + j);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_diagonal() {
        let m = Matrix::from_diagonal(&[2.0, 0.5]);
        let inv = m.inverse().unwrap();
        assert_eq!(inv, Matrix::from_diagonal(&[0.5, 2.0]));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.2],
            vec![0.5, -0.2, 2.0],
        ]);
        let p = m.inverse().unwrap().mul(&m);
        assert!(p.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn ill_conditioned_is_rejected() {
        let m = Matrix::from_diagonal(&[1.0, 1e-13]);
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix { .. })));
        let z = Matrix::<f64>::zeros(2);
        assert!(z.inverse().is_err());
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // path Laplacian on three vertices: {0, 1, 3}
        let m = Matrix::<f64>::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ]);
        let e = m.symmetric_eigenvalues();
        for (got, want) in e.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn positive_definiteness() {
        assert!(Matrix::from_diagonal(&[1.0, 2.0]).is_positive_definite());
        assert!(!Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_positive_definite());
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]);
        let p = m.inverse().unwrap().mul(&m);
        assert!(p.sub(&Matrix::identity(2)).max_abs() < 1e-6);
    }
}
