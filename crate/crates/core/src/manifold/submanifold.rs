//! Parametrised submanifolds, pulled-back metrics and restricted potentials.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::diff::FiniteDifference;
use crate::manifold::{
    integrate_flow_until_converged, Chart, FlowOptions, MetricField, ScalarPotential,
};
use crate::scalar::Scalar;

/// Embedding `ι: U ⊂ R^m → M`.
pub trait Submanifold<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, u: &[T]) -> Vec<T>;

    /// Columns of the Jacobian of the embedding, one tangent vector per parameter.
    fn tangent_basis(&self, u: &[T]) -> Vec<Vec<T>> {
        let fd = FiniteDifference::default();
        (0..self.dim()).map(|a| fd.partial(|p| self.embed(p), u, a)).collect()
    }

    fn contains(&self, u: &[T]) -> bool {
        u.len() == self.dim() && u.iter().all(|v| v.is_finite())
    }
}

/// `origin + Σ u_a basis_a`.
#[derive(Debug, Clone)]
pub struct AffineSubspace<T> {
    pub origin: Vec<T>,
    pub basis: Vec<Vec<T>>,
}

impl<T: Scalar> AffineSubspace<T> {
    /// The coordinate slice `{x_fixed = origin_fixed}` through `origin`.
    pub fn coordinate_slice(origin: Vec<T>, fixed: usize) -> Self {
        let n = origin.len();
        let basis = (0..n)
            .filter(|&i| i != fixed)
            .map(|i| {
                let mut e = vec![T::zero(); n];
                e[i] = T::one();
                e
            })
            .collect();
        Self { origin, basis }
    }
}

impl<T: Scalar> Submanifold<T> for AffineSubspace<T> {
    fn dim(&self) -> usize {
        self.basis.len()
    }
    fn embed(&self, u: &[T]) -> Vec<T> {
        let mut x = self.origin.clone();
        for (ua, b) in u.iter().zip(&self.basis) {
            for (xi, &bi) in x.iter_mut().zip(b) {
                *xi += *ua * bi;
            }
        }
        x
    }
    fn tangent_basis(&self, _u: &[T]) -> Vec<Vec<T>> {
        self.basis.clone()
    }
}

/// Induced metric `ι*g` on the parameter chart.
pub struct Pullback<'a, M: ?Sized, S: ?Sized> {
    pub metric: &'a M,
    pub sub: &'a S,
}

impl<T: Scalar, M: MetricField<T> + ?Sized, S: Submanifold<T> + ?Sized> Chart<T> for Pullback<'_, M, S> {
    fn dim(&self) -> usize {
        self.sub.dim()
    }
    fn contains(&self, u: &[T]) -> bool {
        self.sub.contains(u) && self.metric.contains(&self.sub.embed(u))
    }
}

impl<T: Scalar, M: MetricField<T> + ?Sized, S: Submanifold<T> + ?Sized> MetricField<T>
    for Pullback<'_, M, S>
{
    fn metric(&self, u: &[T]) -> Matrix<T> {
        let g = self.metric.metric(&self.sub.embed(u));
        let basis = self.sub.tangent_basis(u);
        Matrix::from_fn(self.sub.dim(), |a, b| g.bilinear(&basis[a], &basis[b]))
    }
}

/// `f ∘ ι`.
pub struct Restricted<'a, P: ?Sized, S: ?Sized> {
    pub potential: &'a P,
    pub sub: &'a S,
}

impl<T: Scalar, P: ScalarPotential<T> + ?Sized, S: Submanifold<T> + ?Sized> ScalarPotential<T>
    for Restricted<'_, P, S>
{
    fn value(&self, u: &[T]) -> T {
        self.potential.value(&self.sub.embed(u))
    }
    fn differential(&self, u: &[T]) -> Vec<T> {
        let df = self.potential.differential(&self.sub.embed(u));
        self.sub
            .tangent_basis(u)
            .iter()
            .map(|b| b.iter().zip(&df).map(|(&bi, &di)| bi * di).sum())
            .collect()
    }
}

/// Tangent basis at `u`, rejecting rank-deficient parametrisations.
pub fn checked_tangent_basis<T, M, S>(g: &M, sub: &S, u: &[T]) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    S: Submanifold<T> + ?Sized,
{
    let basis = sub.tangent_basis(u);
    if basis.is_empty() {
        return Err(Error::DegenerateTangent);
    }
    let gram = Pullback { metric: g, sub }.metric(u);
    if gram.inverse().is_err() || !gram.is_positive_definite() {
        return Err(Error::DegenerateTangent);
    }
    Ok(basis)
}

/// Minimiser of `f` on the submanifold, found by running the gradient flow of
/// `f ∘ ι` under the induced metric from parameters `u0` until the restricted
/// gradient norm drops below `grad_threshold`. Returns the parameters.
pub fn constrained_minimizer<T, M, P, S>(
    g: &M,
    f: &P,
    sub: &S,
    u0: &[T],
    tol: T,
    grad_threshold: T,
) -> Result<Vec<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
    S: Submanifold<T> + ?Sized,
{
    let metric = Pullback { metric: g, sub };
    let potential = Restricted { potential: f, sub };
    let opts = FlowOptions {
        grad_threshold,
        ..FlowOptions::default()
    };
    let traj = integrate_flow_until_converged(&metric, &potential, u0, tol, &opts)?;
    Ok(traj.final_position())
}
