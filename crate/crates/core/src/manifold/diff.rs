//! Central finite differences used whenever an analytic derivative is not supplied.

use crate::scalar::Scalar;

/// Central-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Three-point, O(h²).
    Second,
    /// Five-point, O(h⁴).
    #[default]
    Fourth,
}

/// Step-size policy for numerical derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference<T> {
    pub stencil: Stencil,
    /// Fixed step; `None` uses `eps^(1/3) * max(1, |x|)`.
    pub step: Option<T>,
}

impl<T: Scalar> Default for FiniteDifference<T> {
    fn default() -> Self {
        Self {
            stencil: Stencil::Fourth,
            step: None,
        }
    }
}

impl<T: Scalar> FiniteDifference<T> {
    pub fn with_step(stencil: Stencil, step: T) -> Self {
        Self {
            stencil,
            step: Some(step),
        }
    }

    pub fn step_at(&self, coordinate: T) -> T {
        match self.step {
            Some(h) => h,
            None => default_step(coordinate),
        }
    }

    /// Partial derivative of a vector-valued function along coordinate `axis`.
    pub fn partial<F>(&self, f: F, x: &[T], axis: usize) -> Vec<T>
    where
        F: Fn(&[T]) -> Vec<T>,
    {
        let h = self.step_at(x[axis]);
        warn_if_tiny(h, x[axis]);
        let eval = |offset: T| {
            let mut p = x.to_vec();
            p[axis] += offset;
            f(&p)
        };
        combine(self.stencil, h, eval)
    }

    /// Derivative of a vector-valued function of one real variable.
    pub fn derivative<F>(&self, f: F, t: T) -> Vec<T>
    where
        F: Fn(T) -> Vec<T>,
    {
        let h = self.step_at(t);
        combine(self.stencil, h, |offset| f(t + offset))
    }

    /// Gradient of a scalar function.
    pub fn gradient<F>(&self, f: F, x: &[T]) -> Vec<T>
    where
        F: Fn(&[T]) -> T,
    {
        (0..x.len())
            .map(|axis| self.partial(|p| vec![f(p)], x, axis)[0])
            .collect()
    }
}

/// `eps^(1/3) * max(1, |x|)`.
pub fn default_step<T: Scalar>(x: T) -> T {
    T::epsilon().cbrt() * x.abs().max(T::one())
}

fn warn_if_tiny<T: Scalar>(h: T, x: T) {
    if h < T::lit(1e3) * T::epsilon() * x.abs() {
        log::warn!(
            "finite-difference step {} is below 1e3 * eps * |x| = {}; derivatives will be dominated by roundoff",
            h,
            T::lit(1e3) * T::epsilon() * x.abs()
        );
    }
}

fn combine<T: Scalar>(stencil: Stencil, h: T, eval: impl Fn(T) -> Vec<T>) -> Vec<T> {
    match stencil {
        Stencil::Second => {
            let fp = eval(h);
            let fm = eval(-h);
            let inv = T::one() / (T::lit(2.0) * h);
            fp.iter().zip(&fm).map(|(&a, &b)| (a - b) * inv).collect()
        }
        Stencil::Fourth => {
            let two = T::lit(2.0);
            let eight = T::lit(8.0);
            let f2 = eval(two * h);
            let f1 = eval(h);
            let m1 = eval(-h);
            let m2 = eval(-two * h);
            let inv = T::one() / (T::lit(12.0) * h);
            (0..f1.len())
                .map(|i| (-f2[i] + eight * f1[i] - eight * m1[i] + m2[i]) * inv)
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_is_near_exact_on_quartic() {
        let fd = FiniteDifference::with_step(Stencil::Fourth, 0.1);
        let d = fd.derivative(|t: f64| vec![t.powi(4)], 1.0);
        assert!((d[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_error_scales_quadratically() {
        let f = |t: f64| vec![t.sin()];
        let e1 = (FiniteDifference::with_step(Stencil::Second, 1e-2).derivative(f, 0.7)[0]
            - 0.7f64.cos())
        .abs();
        let e2 = (FiniteDifference::with_step(Stencil::Second, 5e-3).derivative(f, 0.7)[0]
            - 0.7f64.cos())
        .abs();
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn default_step_follows_policy() {
        let h: f64 = default_step(10.0);
        assert!((h - f64::EPSILON.cbrt() * 10.0).abs() < 1e-20);
        assert_eq!(default_step(0.01f64), f64::EPSILON.cbrt());
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = FiniteDifference::default().gradient(|x: &[f64]| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0]);
        assert!((g[0] - 4.0).abs() < 1e-9);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }
}
