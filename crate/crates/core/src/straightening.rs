//! The straightening connection of a potential and its non-metricity.
//!
//! For a metric `g` and a potential `f`, the connection
//!
//! ```text
//! ∇̃_X Y = ∇^g_X Y − g(X, Y) Z,    ‖grad f‖² Z = ∇^g_{grad f} grad f − λ grad f
//! ```
//!
//! is symmetric and makes every gradient curve of `f` a pregeodesic:
//! `∇̃_{grad f} grad f = λ grad f`. It is undefined at critical points of `f`.
//! Its non-metricity has the closed form
//! `C̃(W, X, Y) = g(W, X) g(Y, Z) + g(W, Y) g(X, Z)`, which is not totally
//! symmetric in general.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::diff::FiniteDifference;
use crate::manifold::submanifold::checked_tangent_basis;
use crate::manifold::{
    christoffel_levi_civita, covariant_acceleration, ensure_in_domain, gradient, Christoffel, Connection,
    LeviCivita, MetricField, ScalarPotential, Submanifold, Trajectory,
};
use crate::scalar::Scalar;

/// Gradient norms at or below this are treated as critical points.
pub const DEFAULT_EPS_GRAD: f64 = 1e-10;

/// Everything about `grad f` needed at one point.
#[derive(Debug, Clone)]
pub struct GradientJet<T> {
    pub metric: Matrix<T>,
    pub grad: Vec<T>,
    /// `‖grad f‖²_g`
    pub grad_norm_sq: T,
    /// Levi-Civita coefficients at the point.
    pub levi_civita: Christoffel<T>,
    /// `∇^g_{grad f} grad f`
    pub self_derivative: Vec<T>,
}

/// `∇̃^f` for a metric, a potential and a constant pregeodesic factor `λ`.
#[derive(Debug, Clone)]
pub struct StraighteningConnection<M, P, T> {
    pub metric: M,
    pub potential: P,
    /// Constant `λ` in `∇̃_{grad f} grad f = λ grad f`; zero makes gradient
    /// curves affinely parametrised geodesics.
    pub factor: T,
    pub eps_grad: T,
}

impl<T: Scalar, M: MetricField<T>, P: ScalarPotential<T>> StraighteningConnection<M, P, T> {
    pub fn new(metric: M, potential: P) -> Self {
        Self {
            metric,
            potential,
            factor: T::zero(),
            eps_grad: T::lit(DEFAULT_EPS_GRAD),
        }
    }

    pub fn with_factor(mut self, factor: T) -> Self {
        self.factor = factor;
        self
    }

    pub fn with_eps_grad(mut self, eps: T) -> Self {
        self.eps_grad = eps;
        self
    }

    pub fn jet(&self, x: &[T]) -> Result<GradientJet<T>> {
        gradient_jet(&self.metric, &self.potential, x, self.eps_grad)
    }

    /// The vector field `Z`.
    pub fn z_field(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(z_from_jet(&self.jet(x)?, self.factor))
    }

    /// Closed form `g(W, X) g(Y, Z) + g(W, Y) g(X, Z)`.
    pub fn nonmetricity_closed_form(&self, x: &[T], w: &[T], xv: &[T], y: &[T]) -> Result<T> {
        let jet = self.jet(x)?;
        let z = z_from_jet(&jet, self.factor);
        let g = &jet.metric;
        Ok(g.bilinear(w, xv) * g.bilinear(y, &z) + g.bilinear(w, y) * g.bilinear(xv, &z))
    }

    /// `‖∇̃_{grad f} grad f − λ grad f‖_g / ‖grad f‖_g`, evaluating the covariant
    /// derivative from this connection's coefficients and a finite-difference
    /// directional derivative of the gradient field (independent of the
    /// Hessian route used to build `Z`).
    pub fn pregeodesic_residual(&self, x: &[T]) -> Result<T> {
        let coeffs = self.coefficients(x)?;
        let g = self.metric.metric(x);
        let grad = gradient(&self.metric, &self.potential, x)?;
        let gn = g.bilinear(&grad, &grad).sqrt();
        // d/ds grad f(x + s u) at s = 0 along the Euclidean unit u = grad/|grad|
        let enorm = crate::scalar::norm(&grad);
        let dir: Vec<T> = grad.iter().map(|&v| v / enorm).collect();
        let fd = FiniteDifference::default();
        let dgrad = fd.derivative(
            |s| {
                let p: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| xi + s * di).collect();
                gradient(&self.metric, &self.potential, &p).unwrap_or_else(|_| vec![T::nan(); x.len()])
            },
            T::zero(),
        );
        let quad = coeffs.contract(&grad, &grad);
        let resid: Vec<T> = (0..x.len())
            .map(|k| enorm * dgrad[k] + quad[k] - self.factor * grad[k])
            .collect();
        Ok(g.bilinear(&resid, &resid).max(T::zero()).sqrt() / gn)
    }
}

impl<T: Scalar, M: MetricField<T>, P: ScalarPotential<T>> Connection<T> for StraighteningConnection<M, P, T> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Chart domain minus the critical set `‖grad f‖ ≤ eps_grad`.
    fn contains(&self, x: &[T]) -> bool {
        self.metric.contains(x)
            && gradient(&self.metric, &self.potential, x)
                .map(|gr| self.metric.metric(x).bilinear(&gr, &gr).sqrt() > self.eps_grad)
                .unwrap_or(false)
    }

    fn coefficients(&self, x: &[T]) -> Result<Christoffel<T>> {
        let jet = self.jet(x)?;
        Ok(coeffs_from_jet(&jet, self.factor))
    }
}

/// `grad f`, its squared norm and `∇^g_{grad f} grad f` at `x`.
///
/// `(∇^g_G G)^k = G^i ∂_i G^k + Γ^k_ij G^i G^j` with
/// `∂_i G = g⁻¹ (Hess f e_i − (∂_i g) G)`.
pub fn gradient_jet<T, M, P>(g: &M, f: &P, x: &[T], eps_grad: T) -> Result<GradientJet<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    ensure_in_domain(g, x)?;
    let n = x.len();
    let metric = g.metric(x);
    let inv = g.inverse_metric(x)?;
    let df = f.differential(x);
    let grad = inv.mul_vec(&df);
    let grad_norm_sq = metric.bilinear(&grad, &grad);
    if !(grad_norm_sq.sqrt() > eps_grad) {
        return Err(Error::CriticalPoint {
            norm: grad_norm_sq.max(T::zero()).sqrt().to_f64().unwrap_or(f64::NAN),
            threshold: eps_grad.to_f64().unwrap_or(f64::NAN),
        });
    }
    let hess = f.hessian(x);
    let dg = g.metric_partials(x);
    // D[k][i] = ∂_i G^k
    let mut jac = Matrix::zeros(n);
    for i in 0..n {
        let dgi_g = dg[i].mul_vec(&grad);
        let rhs: Vec<T> = (0..n).map(|l| hess[(l, i)] - dgi_g[l]).collect();
        let col = inv.mul_vec(&rhs);
        for k in 0..n {
            jac[(k, i)] = col[k];
        }
    }
    let levi_civita = christoffel_levi_civita(g, x)?;
    let quad = levi_civita.contract(&grad, &grad);
    let transport = jac.mul_vec(&grad);
    let self_derivative = transport.iter().zip(&quad).map(|(&a, &b)| a + b).collect();
    Ok(GradientJet {
        metric,
        grad,
        grad_norm_sq,
        levi_civita,
        self_derivative,
    })
}

fn z_from_jet<T: Scalar>(jet: &GradientJet<T>, factor: T) -> Vec<T> {
    jet.self_derivative
        .iter()
        .zip(&jet.grad)
        .map(|(&a, &g)| (a - factor * g) / jet.grad_norm_sq)
        .collect()
}

fn coeffs_from_jet<T: Scalar>(jet: &GradientJet<T>, factor: T) -> Christoffel<T> {
    let z = z_from_jet(jet, factor);
    let n = z.len();
    Christoffel::from_fn(n, |k, i, j| jet.levi_civita.get(k, i, j) - jet.metric[(i, j)] * z[k])
}

/// `Z = (∇^g_{grad f} grad f − λ grad f) / ‖grad f‖²`.
pub fn z_field<T, M, P>(g: &M, f: &P, factor: T, x: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    let jet = gradient_jet(g, f, x, T::lit(DEFAULT_EPS_GRAD))?;
    Ok(z_from_jet(&jet, factor))
}

/// `Γ̃^k_ij = Γ^k_ij − g_ij Z^k`.
pub fn straightening_coeffs<T, M, P>(g: &M, f: &P, factor: T, x: &[T]) -> Result<Christoffel<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    let jet = gradient_jet(g, f, x, T::lit(DEFAULT_EPS_GRAD))?;
    Ok(coeffs_from_jet(&jet, factor))
}

/// `(∇_W g)(X, Y) = W[g(X, Y)] − g(∇_W X, Y) − g(X, ∇_W Y)` for constant
/// coordinate fields `X`, `Y`, from the connection coefficients and the metric
/// derivatives.
pub fn nonmetricity<T, C, M>(conn: &C, g: &M, x: &[T], w: &[T], xv: &[T], y: &[T]) -> Result<T>
where
    T: Scalar,
    C: Connection<T> + ?Sized,
    M: MetricField<T> + ?Sized,
{
    ensure_in_domain(g, x)?;
    let gamma = conn.coefficients(x)?;
    let metric = g.metric(x);
    let dg = g.metric_partials(x);
    let directional: T = w
        .iter()
        .zip(&dg)
        .map(|(&wl, dgl)| wl * dgl.bilinear(xv, y))
        .sum();
    let nab_x = gamma.contract(w, xv);
    let nab_y = gamma.contract(w, y);
    Ok(directional - metric.bilinear(&nab_x, y) - metric.bilinear(xv, &nab_y))
}

/// `C(γ̇, γ̇, γ̇)` along a gradient-descent trajectory from the curve alone:
/// `2 [λ ‖γ̇‖² + g(γ̇, ∇^g_γ̇ γ̇)]`, so that `f̈ = −C(γ̇, γ̇, γ̇) − 2λ ḟ`.
///
/// Every connection straightening `f` with the same constant `λ` shares this value.
pub fn nonmetricity_cubic<T, M>(g: &M, factor: T, traj: &Trajectory<T>, t: T) -> Result<T>
where
    T: Scalar,
    M: MetricField<T>,
{
    let x = traj.position(t)?;
    let v = traj.velocity(t)?;
    let acc = covariant_acceleration(&LeviCivita(g), traj, t)?;
    let metric = g.metric(&x);
    Ok(T::lit(2.0) * (factor * metric.bilinear(&v, &v) + metric.bilinear(&v, &acc)))
}

/// Which slot of the Riemann tensor the Ricci contraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RicciContraction {
    /// `Ric_jk = R^i_ijk`; the unit round sphere has `s = +2`.
    #[default]
    Standard,
    /// `Ric_jk = R^i_jik = −R^i_ijk`. This is the sign under which the
    /// single-mode Gaussian closed form `a(a − 5a*)/(a − a*)²` is stated.
    Opposite,
}

/// Riemann tensor `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`
/// at `x`, stored `[l][i][j][k]`, with `∂Γ` by central differences.
pub fn riemann<T, C>(conn: &C, x: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    C: Connection<T> + ?Sized,
{
    let n = conn.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let gamma = conn.coefficients(x)?;
    let fd = FiniteDifference::default();
    let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let dgamma: Vec<Vec<T>> = (0..n)
        .map(|i| {
            fd.partial(
                |p| match conn.coefficients(p) {
                    Ok(c) => c.as_slice().to_vec(),
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        vec![T::nan(); n * n * n]
                    }
                },
                x,
                i,
            )
        })
        .collect();
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let d = |i: usize, l: usize, j: usize, k: usize| dgamma[i][(l * n + j) * n + k];
    let mut r = vec![T::zero(); n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = d(i, l, j, k) - d(j, l, i, k);
                    for m in 0..n {
                        v += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    r[((l * n + i) * n + j) * n + k] = v;
                }
            }
        }
    }
    Ok(r)
}

/// Scalar curvature `s = g^{jk} Ric_jk` of a connection.
pub fn scalar_curvature<T, C, M>(conn: &C, g: &M, x: &[T], contraction: RicciContraction) -> Result<T>
where
    T: Scalar,
    C: Connection<T> + ?Sized,
    M: MetricField<T> + ?Sized,
{
    ensure_in_domain(g, x)?;
    let n = conn.dim();
    let r = riemann(conn, x)?;
    let inv = g.inverse_metric(x)?;
    let mut s = T::zero();
    for j in 0..n {
        for k in 0..n {
            let ric: T = (0..n).map(|i| r[((i * n + i) * n + j) * n + k]).sum();
            s += inv[(j, k)] * ric;
        }
    }
    Ok(match contraction {
        RicciContraction::Standard => s,
        RicciContraction::Opposite => -s,
    })
}

/// Orthogonality of `grad f` to a submanifold at `ι(u_hat)`:
/// `max_v |g(grad f, v)| / (‖grad f‖ ‖v‖)` over the parametrisation's tangent
/// basis. Near zero at a constrained minimiser; returns zero when `grad f`
/// itself vanishes there.
pub fn projection_orthogonality<T, M, P, S>(g: &M, f: &P, sub: &S, u_hat: &[T]) -> Result<T>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
    S: Submanifold<T> + ?Sized,
{
    let p = sub.embed(u_hat);
    ensure_in_domain(g, &p)?;
    let basis = checked_tangent_basis(g, sub, u_hat)?;
    let metric = g.metric(&p);
    let grad = gradient(g, f, &p)?;
    let gn = metric.bilinear(&grad, &grad).max(T::zero()).sqrt();
    if gn == T::zero() {
        return Ok(T::zero());
    }
    Ok(basis
        .iter()
        .map(|v| {
            let vn = metric.bilinear(v, v).sqrt();
            metric.bilinear(&grad, v).abs() / (gn * vn)
        })
        .fold(T::zero(), T::max))
}
