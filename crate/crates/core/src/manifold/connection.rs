use crate::error::Result;
use crate::manifold::{ensure_in_domain, metric_inverse, MetricField};
use crate::scalar::Scalar;

/// Connection coefficients `Γ^k_ij` at one point, stored `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Christoffel<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut out = Self::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.data[(k * n + i) * n + j] = f(k, i, j);
                }
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// `Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &[T], v: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = T::zero();
                for i in 0..n {
                    if u[i] == T::zero() {
                        continue;
                    }
                    for j in 0..n {
                        acc += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        let n = self.n;
        (0..n).all(|k| (0..n).all(|i| (0..i).all(|j| (self.get(k, i, j) - self.get(k, j, i)).abs() <= tol)))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub(crate) fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Affine connection given by its coefficient field.
pub trait Connection<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Region where the coefficients are defined.
    fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite())
    }

    fn coefficients(&self, x: &[T]) -> Result<Christoffel<T>>;

    /// Whether `Γ^k_ij = Γ^k_ji` holds by construction.
    fn is_symmetric(&self) -> bool {
        true
    }
}

impl<T: Scalar, C: Connection<T> + ?Sized> Connection<T> for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[T]) -> bool {
        (**self).contains(x)
    }
    fn coefficients(&self, x: &[T]) -> Result<Christoffel<T>> {
        (**self).coefficients(x)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

/// Identically zero coefficients: straight lines are geodesics.
#[derive(Debug, Clone, Copy)]
pub struct FlatConnection {
    pub dim: usize,
}

impl<T: Scalar> Connection<T> for FlatConnection {
    fn dim(&self) -> usize {
        self.dim
    }
    fn coefficients(&self, _x: &[T]) -> Result<Christoffel<T>> {
        Ok(Christoffel::zeros(self.dim))
    }
}

/// Levi-Civita connection of a metric.
#[derive(Debug, Clone)]
pub struct LeviCivita<M>(pub M);

impl<T: Scalar, M: MetricField<T>> Connection<T> for LeviCivita<M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn contains(&self, x: &[T]) -> bool {
        self.0.contains(x)
    }
    fn coefficients(&self, x: &[T]) -> Result<Christoffel<T>> {
        christoffel_levi_civita(&self.0, x)
    }
}

/// `Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel_levi_civita<T: Scalar, M: MetricField<T> + ?Sized>(
    g: &M,
    x: &[T],
) -> Result<Christoffel<T>> {
    ensure_in_domain(g, x)?;
    let inv = metric_inverse(g, x)?;
    let dg = g.metric_partials(x);
    let n = x.len();
    let half = T::lit(0.5);
    // first-kind symbols Γ_{l,ij}
    let lower = |l: usize, i: usize, j: usize| half * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
    let mut first = vec![T::zero(); n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..=i {
                let v = lower(l, i, j);
                first[(l * n + i) * n + j] = v;
                first[(l * n + j) * n + i] = v;
            }
        }
    }
    Ok(Christoffel::from_fn(n, |k, i, j| {
        (0..n).map(|l| inv[(k, l)] * first[(l * n + i) * n + j]).sum()
    }))
}
