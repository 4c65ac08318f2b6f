use crate::error::{Error, Result};
use crate::manifold::ode::{dopri5, OdeOptions, Trajectory, VelocityRule};
use crate::manifold::{ensure_in_domain, gradient, norm, Connection, MetricField, ScalarPotential};
use crate::scalar::Scalar;

/// Geodesic `ẍ^k = −Γ^k_ij ẋ^i ẋ^j` from `(x0, v0)`.
///
/// There is no event detection. A connection that blows up on a hypersurface,
/// such as a straightening connection at critical points of `f`, can be
/// stepped across without an error, so keep `t_end` short of it.
pub fn integrate_geodesic<T, C>(conn: &C, x0: &[T], v0: &[T], t_end: T, tol: T) -> Result<Trajectory<T>>
where
    T: Scalar,
    C: Connection<T> + ?Sized,
{
    let n = conn.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().max(v0.len()),
        });
    }
    check_tol(tol)?;
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(v0);
    dopri5(
        |y: &[T]| {
            let (x, v) = y.split_at(n);
            let gamma = conn.coefficients(x)?;
            let acc = gamma.contract(v, v);
            let mut out = v.to_vec();
            out.extend(acc.into_iter().map(|a| -a));
            Ok(out)
        },
        |y: &[T]| conn.contains(&y[..n]),
        |_, _| Ok(false),
        &y0,
        t_end,
        &OdeOptions::with_tol(tol),
        VelocityRule::Embedded(n),
    )
}

/// Gradient descent `ẋ = −grad f` up to `t_end`.
pub fn integrate_flow<T, M, P>(g: &M, f: &P, x0: &[T], t_end: T, tol: T) -> Result<Trajectory<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    ensure_in_domain(g, x0)?;
    check_tol(tol)?;
    dopri5(
        |x: &[T]| Ok(gradient(g, f, x)?.into_iter().map(|v| -v).collect()),
        |x: &[T]| g.contains(x),
        |_, _| Ok(false),
        x0,
        t_end,
        &OdeOptions::with_tol(tol),
        VelocityRule::Derivative,
    )
}

/// Open-horizon settings for [`integrate_flow_until_converged`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions<T> {
    /// Stop once `‖grad f‖_g` falls below this.
    pub grad_threshold: T,
    /// Accepted steps per output window of the progress check.
    pub window: usize,
    /// Hard cap on the integration time.
    pub max_time: T,
}

impl<T: Scalar> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            grad_threshold: T::lit(1e-6),
            window: 200,
            max_time: T::lit(1e7),
        }
    }
}

/// Gradient descent until `‖grad f‖_g < grad_threshold`.
///
/// Fails with [`Error::NonConvergence`] when the gradient norm at the end of an
/// output window is not smaller than at its start.
pub fn integrate_flow_until_converged<T, M, P>(
    g: &M,
    f: &P,
    x0: &[T],
    tol: T,
    opts: &FlowOptions<T>,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    ensure_in_domain(g, x0)?;
    check_tol(tol)?;
    let grad_norm = |x: &[T]| -> Result<T> { Ok(norm(g, x, &gradient(g, f, x)?)) };
    if grad_norm(x0)? < opts.grad_threshold {
        return integrate_flow(g, f, x0, T::zero(), tol);
    }
    let mut window_start = grad_norm(x0)?;
    let mut count = 0usize;
    dopri5(
        |x: &[T]| Ok(gradient(g, f, x)?.into_iter().map(|v| -v).collect()),
        |x: &[T]| g.contains(x),
        |t, x| {
            let gn = grad_norm(x)?;
            if gn < opts.grad_threshold {
                return Ok(true);
            }
            count += 1;
            if count % opts.window.max(1) == 0 {
                if gn >= window_start {
                    return Err(Error::NonConvergence {
                        t: t.to_f64().unwrap_or(f64::NAN),
                    });
                }
                window_start = gn;
            }
            Ok(false)
        },
        x0,
        opts.max_time,
        &OdeOptions::with_tol(tol),
        VelocityRule::Derivative,
    )
}

/// `ẍ^k + Γ^k_ij ẋ^i ẋ^j` along a trajectory, with `ẍ` from the dense output.
pub fn covariant_acceleration<T, C>(conn: &C, traj: &Trajectory<T>, t: T) -> Result<Vec<T>>
where
    T: Scalar,
    C: Connection<T> + ?Sized,
{
    let acc = traj.acceleration(t)?;
    let x = traj.position(t)?;
    let v = traj.velocity(t)?;
    let gamma = conn.coefficients(&x)?;
    Ok(acc.iter().zip(gamma.contract(&v, &v)).map(|(&a, b)| a + b).collect())
}

fn check_tol<T: Scalar>(tol: T) -> Result<()> {
    if tol > T::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}
