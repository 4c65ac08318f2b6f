//! Hessian (dually flat) models: a convex potential `φ(θ)` with metric
//! `g = ∂²φ`, dual coordinates `η = ∂φ`, dual potential `ψ(η) = θ·η − φ(θ)`
//! and canonical divergence `D(p ‖ q) = φ(p) + ψ(q) − θ(p)·η(q)`.
//!
//! The flat connection has vanishing coefficients in `θ`, and the gradient of
//! `D_q = D(q ‖ ·)` satisfies `∇_{grad D_q} grad D_q = grad D_q`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::diff::{FiniteDifference, Stencil};
use crate::manifold::{Chart, MetricField, ScalarPotential};
use crate::scalar::{dot, Scalar};

/// Convex potential on an affine chart.
pub trait HessianModel<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn contains(&self, theta: &[T]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|v| v.is_finite())
    }

    fn potential(&self, theta: &[T]) -> T;

    /// `η_i = ∂φ/∂θ^i`.
    fn dual_coordinates(&self, theta: &[T]) -> Vec<T> {
        FiniteDifference::default().gradient(|p| self.potential(p), theta)
    }

    /// `∂²φ/∂θ^i∂θ^j`.
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        let fd = FiniteDifference::default();
        let n = theta.len();
        let cols: Vec<Vec<T>> = (0..n).map(|j| fd.partial(|p| self.dual_coordinates(p), theta, j)).collect();
        Matrix::from_fn(n, |i, j| T::lit(0.5) * (cols[j][i] + cols[i][j]))
    }

    /// Starting point for inverting `η(θ)`.
    fn reference_point(&self) -> Vec<T> {
        vec![T::zero(); self.dim()]
    }
}

impl<T: Scalar, H: HessianModel<T> + ?Sized> HessianModel<T> for &H {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, theta: &[T]) -> bool {
        (**self).contains(theta)
    }
    fn potential(&self, theta: &[T]) -> T {
        (**self).potential(theta)
    }
    fn dual_coordinates(&self, theta: &[T]) -> Vec<T> {
        (**self).dual_coordinates(theta)
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        (**self).hessian(theta)
    }
    fn reference_point(&self) -> Vec<T> {
        (**self).reference_point()
    }
}

/// `φ(θ) = ½ |θ|²`; self-dual, `g` Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticModel {
    pub dim: usize,
}

impl<T: Scalar> HessianModel<T> for QuadraticModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, theta: &[T]) -> T {
        T::lit(0.5) * dot(theta, theta)
    }
    fn dual_coordinates(&self, theta: &[T]) -> Vec<T> {
        theta.to_vec()
    }
    fn hessian(&self, _theta: &[T]) -> Matrix<T> {
        Matrix::identity(self.dim)
    }
}

/// `φ(θ) = Σ e^{θ_i}`, the log-partition of independent Poisson counts.
/// Dual potential `ψ(η) = Σ (η_i ln η_i − η_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentialModel {
    pub dim: usize,
}

impl<T: Scalar> HessianModel<T> for ExponentialModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, theta: &[T]) -> T {
        theta.iter().map(|t| t.exp()).sum()
    }
    fn dual_coordinates(&self, theta: &[T]) -> Vec<T> {
        theta.iter().map(|t| t.exp()).collect()
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&self.dual_coordinates(theta))
    }
}

/// Log-partition of the 1-D Gaussian in natural parameters
/// `θ = (μ/σ², −1/(2σ²))`: `φ = −θ₁²/(4θ₂) + ½ ln(π/(−θ₂))`, `θ₂ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GaussianLogPartition;

impl<T: Scalar> HessianModel<T> for GaussianLogPartition {
    fn dim(&self) -> usize {
        2
    }
    fn contains(&self, theta: &[T]) -> bool {
        theta.len() == 2 && theta[0].is_finite() && theta[1] < T::zero() && theta[1].is_finite()
    }
    fn potential(&self, theta: &[T]) -> T {
        let (t1, t2) = (theta[0], theta[1]);
        -t1 * t1 / (T::lit(4.0) * t2) + T::lit(0.5) * (T::lit(std::f64::consts::PI) / -t2).ln()
    }
    fn dual_coordinates(&self, theta: &[T]) -> Vec<T> {
        let (t1, t2) = (theta[0], theta[1]);
        // (mean, second moment)
        vec![-t1 / (T::lit(2.0) * t2), t1 * t1 / (T::lit(4.0) * t2 * t2) - T::one() / (T::lit(2.0) * t2)]
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        let (t1, t2) = (theta[0], theta[1]);
        let two = T::lit(2.0);
        let g11 = -T::one() / (two * t2);
        let g12 = t1 / (two * t2 * t2);
        let g22 = -t1 * t1 / (two * t2 * t2 * t2) + T::one() / (two * t2 * t2);
        Matrix::from_rows(&[vec![g11, g12], vec![g12, g22]])
    }
    fn reference_point(&self) -> Vec<T> {
        vec![T::zero(), -T::lit(0.5)]
    }
}

fn check_theta<T: Scalar, H: HessianModel<T> + ?Sized>(model: &H, theta: &[T]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: theta.len(),
        });
    }
    if !model.contains(theta) {
        return Err(Error::OutOfDomain {
            point: crate::error::to_f64_vec(theta),
        });
    }
    Ok(())
}

/// `(η, ψ)` at `θ`, with `ψ = θ·η − φ(θ)`.
pub fn legendre_dual<T: Scalar, H: HessianModel<T> + ?Sized>(model: &H, theta: &[T]) -> Result<(Vec<T>, T)> {
    check_theta(model, theta)?;
    if !model.hessian(theta).is_positive_definite() {
        return Err(Error::NonConvex {
            point: crate::error::to_f64_vec(theta),
        });
    }
    let eta = model.dual_coordinates(theta);
    let psi = dot(theta, &eta) - model.potential(theta);
    Ok((eta, psi))
}

/// `θ` with `∂φ(θ) = η`, by damped Newton from the model's reference point.
pub fn primal_coordinates<T: Scalar, H: HessianModel<T> + ?Sized>(model: &H, eta: &[T]) -> Result<Vec<T>> {
    if eta.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: eta.len(),
        });
    }
    let mut theta = model.reference_point();
    let scale = eta.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let tol = T::epsilon() * T::lit(64.0) * scale;
    let residual = |th: &[T]| -> Vec<T> {
        model.dual_coordinates(th).iter().zip(eta).map(|(&a, &b)| a - b).collect()
    };
    let mut r = residual(&theta);
    for _ in 0..200 {
        let rn = crate::scalar::norm(&r);
        if rn <= tol {
            return Ok(theta);
        }
        let step = model.hessian(&theta).solve(&r)?;
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<T> = theta.iter().zip(&step).map(|(&t, &s)| t - alpha * s).collect();
            if model.contains(&cand) {
                let rc = residual(&cand);
                if crate::scalar::norm(&rc) < rn {
                    theta = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * T::lit(0.5);
        }
        if !accepted {
            // stalled at rounding level
            if rn <= tol * T::lit(1e3) {
                return Ok(theta);
            }
            break;
        }
    }
    if crate::scalar::norm(&r) <= tol * T::lit(1e3) {
        Ok(theta)
    } else {
        Err(Error::RootNotFound(format!(
            "no primal point for eta = {:?}",
            crate::error::to_f64_vec(eta)
        )))
    }
}

/// `D(p ‖ q) = φ(p) + ψ(q) − θ(p)·η(q)` for `p`, `q` given in `θ`.
pub fn canonical_divergence<T: Scalar, H: HessianModel<T> + ?Sized>(model: &H, p: &[T], q: &[T]) -> Result<T> {
    check_theta(model, p)?;
    let (eta_q, psi_q) = legendre_dual(model, q)?;
    Ok(model.potential(p) + psi_q - dot(p, &eta_q))
}

/// `D*(p ‖ q) = D(q ‖ p)`.
pub fn dual_divergence<T: Scalar, H: HessianModel<T> + ?Sized>(model: &H, p: &[T], q: &[T]) -> Result<T> {
    canonical_divergence(model, q, p)
}

/// The Hessian metric `∂²φ` on the `θ` chart.
#[derive(Debug, Clone, Copy)]
pub struct HessianMetric<H>(pub H);

impl<T: Scalar, H: HessianModel<T>> Chart<T> for HessianMetric<H> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn contains(&self, x: &[T]) -> bool {
        self.0.contains(x)
    }
}

impl<T: Scalar, H: HessianModel<T>> MetricField<T> for HessianMetric<H> {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        self.0.hessian(x)
    }
}

/// `D_q = D(q ‖ ·)` as a potential on the `θ` chart, minimised at `q`.
#[derive(Debug, Clone)]
pub struct DivergencePotential<H, T> {
    pub model: H,
    pub q: Vec<T>,
    phi_q: T,
}

impl<T: Scalar, H: HessianModel<T>> DivergencePotential<H, T> {
    pub fn new(model: H, q: Vec<T>) -> Result<Self> {
        check_theta(&model, &q)?;
        let phi_q = model.potential(&q);
        Ok(Self { model, q, phi_q })
    }
}

impl<T: Scalar, H: HessianModel<T>> ScalarPotential<T> for DivergencePotential<H, T> {
    fn value(&self, x: &[T]) -> T {
        // φ(q) + ψ(x) − θ_q·η_x with ψ(x) = θ_x·η_x − φ(x)
        let eta = self.model.dual_coordinates(x);
        self.phi_q + dot(x, &eta) - self.model.potential(x) - dot(&self.q, &eta)
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        Some(self.q.clone())
    }
}

/// The dual potential `ψ` as a model in `η` coordinates; gradient and
/// Hessian come from inverting `η(θ)` numerically.
#[derive(Debug, Clone, Copy)]
pub struct LegendreDual<H>(pub H);

impl<T: Scalar, H: HessianModel<T>> HessianModel<T> for LegendreDual<H> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn contains(&self, eta: &[T]) -> bool {
        eta.len() == self.0.dim() && eta.iter().all(|v| v.is_finite()) && primal_coordinates(&self.0, eta).is_ok()
    }
    fn potential(&self, eta: &[T]) -> T {
        match primal_coordinates(&self.0, eta) {
            Ok(theta) => dot(&theta, eta) - self.0.potential(&theta),
            Err(_) => T::nan(),
        }
    }
    fn dual_coordinates(&self, eta: &[T]) -> Vec<T> {
        primal_coordinates(&self.0, eta).unwrap_or_else(|_| vec![T::nan(); eta.len()])
    }
    fn reference_point(&self) -> Vec<T> {
        self.0.dual_coordinates(&self.0.reference_point())
    }
}

/// `‖(∂V)V − V‖_g / ‖V‖_g` for `V = grad D_q` at `x`, everything in `θ`.
///
/// `V` comes from a finite-difference differential of `D_q` and the inverse
/// Hessian metric; `(∂V)V` is a directional finite difference of `V`. In `θ`
/// the flat connection has zero coefficients, so this is the residual of
/// `∇_V V = V`. Steps are `ε^{1/5}`, the balance point for a fourth-order
/// stencil, since the outer difference sees the inner one's rounding.
pub fn fujiwara_amari_residual<T: Scalar, H: HessianModel<T>>(model: &H, q: &[T], x: &[T]) -> Result<T> {
    check_theta(model, x)?;
    let d = DivergencePotential::new(model, q.to_vec())?;
    let g = HessianMetric(model);
    let step = |v: T| T::epsilon().powf(T::lit(0.2)) * v.abs().max(T::one());
    let field = |p: &[T]| -> Result<Vec<T>> {
        let h = p.iter().fold(T::zero(), |m, &v| m.max(step(v)));
        let fd = FiniteDifference::with_step(Stencil::Fourth, h);
        let dd = fd.gradient(|y| d.value(y), p);
        Ok(g.inverse_metric(p)?.mul_vec(&dd))
    };
    let v = field(x)?;
    let metric = g.metric(x);
    let vn = metric.bilinear(&v, &v).max(T::zero()).sqrt();
    if !(vn > T::lit(1e-10)) {
        return Err(Error::CriticalPoint {
            norm: vn.to_f64().unwrap_or(f64::NAN),
            threshold: 1e-10,
        });
    }
    let en = crate::scalar::norm(&v);
    let dir: Vec<T> = v.iter().map(|&c| c / en).collect();
    let h = x.iter().fold(T::zero(), |m, &c| m.max(step(c)));
    let fd = FiniteDifference::with_step(Stencil::Fourth, h);
    let failure = std::cell::RefCell::new(None);
    let dv = fd.derivative(
        |s| {
            let p: Vec<T> = x.iter().zip(&dir).map(|(&a, &b)| a + s * b).collect();
            field(&p).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                vec![T::nan(); x.len()]
            })
        },
        T::zero(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let r: Vec<T> = dv.iter().zip(&v).map(|(&a, &b)| en * a - b).collect();
    Ok(metric.bilinear(&r, &r).max(T::zero()).sqrt() / vn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_self_dual() {
        let (eta, psi) = legendre_dual(&QuadraticModel { dim: 1 }, &[3.0f64]).unwrap();
        assert_eq!(eta, vec![3.0]);
        assert_eq!(psi, 4.5);
        let (eta, psi) = legendre_dual(&QuadraticModel { dim: 1 }, &[0.0f64]).unwrap();
        assert_eq!((eta[0], psi), (0.0, 0.0));
    }

    #[test]
    fn exponential_conjugate_at_origin() {
        let (eta, psi) = legendre_dual(&ExponentialModel { dim: 1 }, &[0.0f64]).unwrap();
        assert_eq!(eta, vec![1.0]);
        assert_eq!(psi, -1.0);
    }

    #[test]
    fn divergence_values() {
        let q = QuadraticModel { dim: 1 };
        assert_eq!(canonical_divergence(&q, &[1.0f64], &[0.0]).unwrap(), 0.5);
        assert_eq!(canonical_divergence(&q, &[0.7f64], &[0.7]).unwrap(), 0.0);
        let e = ExponentialModel { dim: 1 };
        let d = canonical_divergence(&e, &[2.0f64.ln()], &[0.0]).unwrap();
        assert!((d - (1.0 - 2.0f64.ln())).abs() < 1e-15);
        assert!((d - 0.3069).abs() < 1e-4);
        assert_eq!(dual_divergence(&e, &[0.0f64], &[2.0f64.ln()]).unwrap(), d);
    }

    #[test]
    fn gaussian_log_partition_derivatives() {
        let m = GaussianLogPartition;
        let th = [0.4f64, -0.8];
        let fd = FiniteDifference::default();
        let num = fd.gradient(|p| m.potential(p), &th);
        let eta = m.dual_coordinates(&th);
        for i in 0..2 {
            assert!((num[i] - eta[i]).abs() < 1e-9);
        }
        let h = m.hessian(&th);
        for j in 0..2 {
            let col = fd.partial(|p| m.dual_coordinates(p), &th, j);
            for i in 0..2 {
                assert!((col[i] - h[(i, j)]).abs() < 1e-9);
            }
        }
        // mean μ = θ₁/(−2θ₂), variance −1/(2θ₂)
        assert!((eta[0] - 0.25).abs() < 1e-15);
        assert!((eta[1] - (0.25 * 0.25 + 0.625)).abs() < 1e-15);
        assert!(!m.contains(&[0.0, 0.1]));
    }

    #[test]
    fn newton_inverts_dual_map() {
        let m = GaussianLogPartition;
        let th = [-1.3f64, -0.2];
        let back = primal_coordinates(&m, &m.dual_coordinates(&th)).unwrap();
        assert!((back[0] - th[0]).abs() < 1e-10 && (back[1] - th[1]).abs() < 1e-10);
    }

    #[test]
    fn fujiwara_amari_quadratic_is_exact() {
        let r = fujiwara_amari_residual(&QuadraticModel { dim: 1 }, &[0.0f64], &[1.0]).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn fujiwara_amari_excludes_the_diagonal() {
        assert!(fujiwara_amari_residual(&ExponentialModel { dim: 1 }, &[0.3f64], &[0.3]).is_err());
    }
}
