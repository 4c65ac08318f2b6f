//! Reference metrics and potentials with analytic derivatives.

use crate::linalg::Matrix;
use crate::manifold::{Chart, MetricField, ScalarPotential};
use crate::scalar::Scalar;

/// Identity metric on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub dim: usize,
}

impl<T: Scalar> Chart<T> for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }
}

impl<T: Scalar> MetricField<T> for Euclidean {
    fn metric(&self, _x: &[T]) -> Matrix<T> {
        Matrix::identity(self.dim)
    }
    fn metric_partials(&self, _x: &[T]) -> Vec<Matrix<T>> {
        vec![Matrix::zeros(self.dim); self.dim]
    }
}

/// `f(x) = ½ Σ w_i (x_i − c_i)²`.
///
/// With unit weights on a Euclidean chart this is half the squared Riemannian
/// distance to `c`.
#[derive(Debug, Clone)]
pub struct Quadratic<T> {
    pub center: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn isotropic(center: Vec<T>) -> Self {
        let weights = vec![T::one(); center.len()];
        Self { center, weights }
    }

    pub fn weighted(center: Vec<T>, weights: Vec<T>) -> Self {
        assert_eq!(center.len(), weights.len());
        Self { center, weights }
    }
}

impl<T: Scalar> ScalarPotential<T> for Quadratic<T> {
    fn value(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        x.iter()
            .zip(&self.center)
            .zip(&self.weights)
            .map(|((&xi, &ci), &wi)| half * wi * (xi - ci) * (xi - ci))
            .sum()
    }
    fn differential(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.center)
            .zip(&self.weights)
            .map(|((&xi, &ci), &wi)| wi * (xi - ci))
            .collect()
    }
    fn hessian(&self, _x: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&self.weights)
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        Some(self.center.clone())
    }
}

/// Round sphere of radius `r` in colatitude/longitude `(θ, φ)`, `0 < θ < π`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere<T> {
    pub radius: T,
}

impl<T: Scalar> Chart<T> for Sphere<T> {
    fn dim(&self) -> usize {
        2
    }
    fn contains(&self, x: &[T]) -> bool {
        x.len() == 2 && x[1].is_finite() && x[0] > T::zero() && x[0] < T::lit(std::f64::consts::PI)
    }
}

impl<T: Scalar> MetricField<T> for Sphere<T> {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        let r2 = self.radius * self.radius;
        let s = x[0].sin();
        Matrix::from_diagonal(&[r2, r2 * s * s])
    }
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        let r2 = self.radius * self.radius;
        let d = T::lit(2.0) * r2 * x[0].sin() * x[0].cos();
        vec![Matrix::from_diagonal(&[T::zero(), d]), Matrix::zeros(2)]
    }
}

/// Height `r ⟨axis, n(θ, φ)⟩` of the embedded sphere above the plane normal
/// to `axis`.
///
/// Critical points are `±axis`; with the default axis `(1, 0, 0)` both lie
/// inside the chart, at `(π/2, 0)` (maximum) and `(π/2, π)` (minimum).
#[derive(Debug, Clone)]
pub struct SphereHeight<T> {
    pub radius: T,
    pub axis: [T; 3],
}

impl<T: Scalar> SphereHeight<T> {
    pub fn new(radius: T) -> Self {
        Self {
            radius,
            axis: [T::one(), T::zero(), T::zero()],
        }
    }

    fn project(&self, v: [T; 3]) -> T {
        self.radius * (self.axis[0] * v[0] + self.axis[1] * v[1] + self.axis[2] * v[2])
    }
}

impl<T: Scalar> ScalarPotential<T> for SphereHeight<T> {
    fn value(&self, x: &[T]) -> T {
        let (st, ct, sp, cp) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        self.project([st * cp, st * sp, ct])
    }
    fn differential(&self, x: &[T]) -> Vec<T> {
        let (st, ct, sp, cp) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        vec![
            self.project([ct * cp, ct * sp, -st]),
            self.project([-st * sp, st * cp, T::zero()]),
        ]
    }
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let (st, ct, sp, cp) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        let tt = self.project([-st * cp, -st * sp, -ct]);
        let tp = self.project([-ct * sp, ct * cp, T::zero()]);
        let pp = self.project([-st * cp, -st * sp, T::zero()]);
        Matrix::from_rows(&[vec![tt, tp], vec![tp, pp]])
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        // -axis in spherical coordinates
        let (ax, ay, az) = (-self.axis[0], -self.axis[1], -self.axis[2]);
        let rho = (ax * ax + ay * ay + az * az).sqrt();
        Some(vec![(az / rho).acos(), ay.atan2(ax)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::diff::FiniteDifference;

    #[test]
    fn sphere_height_derivatives_match_finite_differences() {
        let f = SphereHeight::new(1.3f64);
        let fd = FiniteDifference::default();
        let x = [0.9, -2.1];
        let num = fd.gradient(|p| f.value(p), &x);
        let ana = f.differential(&x);
        for i in 0..2 {
            assert!((num[i] - ana[i]).abs() < 1e-9);
        }
        let h = f.hessian(&x);
        for j in 0..2 {
            let col = fd.partial(|p| f.differential(p), &x, j);
            for i in 0..2 {
                assert!((col[i] - h[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sphere_height_minimizer_is_critical() {
        let f = SphereHeight::new(1.0f64);
        let q = f.minimizer().unwrap();
        assert!((q[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((q[1].abs() - std::f64::consts::PI).abs() < 1e-15);
        assert!(f.differential(&q).iter().all(|d| d.abs() < 1e-15));
        assert!((f.value(&q) + 1.0).abs() < 1e-15);
    }
}
