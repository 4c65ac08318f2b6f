//! Charts, metrics, potentials, connections and the ODE machinery every other
//! module is built on.
//!
//! Conventions: points and tangent vectors are plain coordinate slices in a
//! single global chart. Connection coefficients follow
//! `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`, so `(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_ij X^i Y^j`.

pub mod connection;
pub mod diff;
mod integrate;
pub mod ode;
pub mod submanifold;

pub use connection::{christoffel_levi_civita, Christoffel, Connection, FlatConnection, LeviCivita};
pub use diff::{FiniteDifference, Stencil};
pub use integrate::{covariant_acceleration, integrate_flow, integrate_flow_until_converged, integrate_geodesic, FlowOptions};
pub use ode::{OdeOptions, Sample, Termination, Trajectory};
pub use submanifold::{constrained_minimizer, AffineSubspace, Pullback, Restricted, Submanifold};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};

/// A single global coordinate patch.
pub trait Chart<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Valid-region test for coordinate vectors.
    fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite())
    }
}

/// Position-dependent symmetric positive-definite bilinear form `g_ij`.
pub trait MetricField<T: Scalar>: Chart<T> {
    fn metric(&self, x: &[T]) -> Matrix<T>;

    /// `∂_l g_ij` for every coordinate `l`, one matrix per `l`.
    ///
    /// Defaults to five-point central differences; analytic metrics override it.
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        fd_metric_partials(self, x, &FiniteDifference::default())
    }

    /// `g^{ij}(x)`; diagonal metrics override the general solve.
    fn inverse_metric(&self, x: &[T]) -> Result<Matrix<T>> {
        self.metric(x).inverse()
    }
}

/// Smooth scalar function on the chart.
pub trait ScalarPotential<T: Scalar>: Send + Sync {
    fn value(&self, x: &[T]) -> T;

    /// Covector `∂_i f`.
    fn differential(&self, x: &[T]) -> Vec<T> {
        FiniteDifference::default().gradient(|p| self.value(p), x)
    }

    /// Coordinate Hessian `∂_i ∂_j f`.
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let fd = FiniteDifference::default();
        let n = x.len();
        let cols: Vec<Vec<T>> = (0..n)
            .map(|j| fd.partial(|p| self.differential(p), x, j))
            .collect();
        let half = T::lit(0.5);
        Matrix::from_fn(n, |i, j| half * (cols[j][i] + cols[i][j]))
    }

    /// Location of the unique minimum, when known.
    fn minimizer(&self) -> Option<Vec<T>> {
        None
    }
}

pub(crate) fn fd_metric_partials<T: Scalar, M: MetricField<T> + ?Sized>(
    g: &M,
    x: &[T],
    fd: &FiniteDifference<T>,
) -> Vec<Matrix<T>> {
    let n = x.len();
    (0..n)
        .map(|l| {
            let flat = fd.partial(
                |p| {
                    let m = g.metric(p);
                    (0..n).flat_map(|i| m.row(i).to_vec()).collect()
                },
                x,
                l,
            );
            Matrix::from_fn(n, |i, j| flat[i * n + j])
        })
        .collect()
}

impl<T: Scalar, C: Chart<T> + ?Sized> Chart<T> for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[T]) -> bool {
        (**self).contains(x)
    }
}

impl<T: Scalar, M: MetricField<T> + ?Sized> MetricField<T> for &M {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        (**self).metric(x)
    }
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        (**self).metric_partials(x)
    }
    fn inverse_metric(&self, x: &[T]) -> Result<Matrix<T>> {
        (**self).inverse_metric(x)
    }
}

impl<T: Scalar, P: ScalarPotential<T> + ?Sized> ScalarPotential<T> for &P {
    fn value(&self, x: &[T]) -> T {
        (**self).value(x)
    }
    fn differential(&self, x: &[T]) -> Vec<T> {
        (**self).differential(x)
    }
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        (**self).hessian(x)
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        (**self).minimizer()
    }
}

/// Overrides a metric's derivatives with a chosen finite-difference policy.
#[derive(Debug, Clone)]
pub struct NumericMetric<M, T> {
    pub inner: M,
    pub fd: FiniteDifference<T>,
}

impl<T: Scalar, M: MetricField<T>> Chart<T> for NumericMetric<M, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn contains(&self, x: &[T]) -> bool {
        self.inner.contains(x)
    }
}

impl<T: Scalar, M: MetricField<T>> MetricField<T> for NumericMetric<M, T> {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        self.inner.metric(x)
    }
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        fd_metric_partials(&self.inner, x, &self.fd)
    }
    fn inverse_metric(&self, x: &[T]) -> Result<Matrix<T>> {
        self.inner.inverse_metric(x)
    }
}

pub(crate) fn ensure_in_domain<T: Scalar, C: Chart<T> + ?Sized>(chart: &C, x: &[T]) -> Result<()> {
    if x.len() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            got: x.len(),
        });
    }
    if !chart.contains(x) {
        return Err(Error::OutOfDomain {
            point: crate::error::to_f64_vec(x),
        });
    }
    Ok(())
}

/// `g^{ij}(x)`.
pub fn metric_inverse<T: Scalar, M: MetricField<T> + ?Sized>(g: &M, x: &[T]) -> Result<Matrix<T>> {
    ensure_in_domain(g, x)?;
    g.inverse_metric(x)
}

/// Riemannian gradient `g^{ij} ∂_j f`.
pub fn gradient<T, M, P>(g: &M, f: &P, x: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    let inv = metric_inverse(g, x)?;
    Ok(inv.mul_vec(&f.differential(x)))
}

/// `g_x(u, v)`.
pub fn inner<T: Scalar, M: MetricField<T> + ?Sized>(g: &M, x: &[T], u: &[T], v: &[T]) -> T {
    g.metric(x).bilinear(u, v)
}

/// `‖v‖_g` at `x`.
pub fn norm<T: Scalar, M: MetricField<T> + ?Sized>(g: &M, x: &[T], v: &[T]) -> T {
    inner(g, x, v, v).max(T::zero()).sqrt()
}

/// Symmetry (absolute, 1e-12 scaled by the entries) and positive-definiteness
/// check of `g(x)`. Run on demand, not on every evaluation.
pub fn check_metric<T: Scalar, M: MetricField<T> + ?Sized>(g: &M, x: &[T]) -> bool {
    let m = g.metric(x);
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * m.max_abs().max(T::one());
    m.is_symmetric(tol) && m.is_positive_definite()
}

/// `df(w)`, the directional derivative of `f`.
pub fn directional<T: Scalar, P: ScalarPotential<T> + ?Sized>(f: &P, x: &[T], w: &[T]) -> T {
    dot(&f.differential(x), w)
}
