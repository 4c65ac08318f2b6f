//! Dormand–Prince 5(4) with Hairer's continuous extension.
//!
//! Step control follows Hairer, Nørsett & Wanner (Solving ODEs I):
//! mixed absolute/relative RMS error norm, safety factor 0.9, growth clamped
//! to [0.2, 10]. Given the same initial state and tolerances the accepted
//! steps are bit-for-bit reproducible.

use crate::error::{to_f64_vec, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
    pub initial_step: Option<T>,
}

impl<T: Scalar> OdeOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 500_000,
            initial_step: None,
        }
    }
}

/// Why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested final time.
    Completed,
    /// The next step would leave the chart domain (or the vector field is
    /// undefined there); the trajectory ends at the last valid state.
    DomainExit,
    /// A caller-supplied convergence test fired.
    Converged,
}

/// How tangent vectors are read off the integrated state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VelocityRule {
    /// First-order flow: the velocity is the time derivative of the dense output.
    Derivative,
    /// Second-order system written as `(x, v)`; `x` has the given dimension.
    Embedded(usize),
}

/// One time sample of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub x: Vec<T>,
    pub v: Vec<T>,
}

#[derive(Debug, Clone)]
struct Segment<T> {
    t0: T,
    h: T,
    // five dense-output coefficient vectors, concatenated
    coeffs: Vec<T>,
}

/// Time-sampled curve with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    rule: VelocityRule,
    state_dim: usize,
    times: Vec<T>,
    states: Vec<Vec<T>>,
    derivs: Vec<Vec<T>>,
    segments: Vec<Segment<T>>,
    termination: Termination,
}

impl<T: Scalar> Trajectory<T> {
    pub fn dim(&self) -> usize {
        match self.rule {
            VelocityRule::Derivative => self.state_dim,
            VelocityRule::Embedded(n) => n,
        }
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn span(&self) -> (T, T) {
        (self.times[0], *self.times.last().expect("trajectory has a sample"))
    }

    /// Accepted step times, strictly increasing.
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn samples(&self) -> Vec<Sample<T>> {
        (0..self.times.len())
            .map(|i| Sample {
                t: self.times[i],
                x: self.position_of(&self.states[i]),
                v: self.velocity_of(&self.states[i], &self.derivs[i]),
            })
            .collect()
    }

    pub fn final_position(&self) -> Vec<T> {
        self.position_of(self.states.last().expect("trajectory has a sample"))
    }

    fn position_of(&self, state: &[T]) -> Vec<T> {
        state[..self.dim()].to_vec()
    }

    fn velocity_of(&self, state: &[T], deriv: &[T]) -> Vec<T> {
        match self.rule {
            VelocityRule::Derivative => deriv.to_vec(),
            VelocityRule::Embedded(n) => state[n..2 * n].to_vec(),
        }
    }

    fn check_span(&self, t: T) -> Result<()> {
        let (a, b) = self.span();
        let slack = T::epsilon() * T::lit(64.0) * (b.abs().max(T::one()));
        if t < a - slack || t > b + slack || !t.is_finite() {
            return Err(Error::OutOfSpan {
                t: t.to_f64().unwrap_or(f64::NAN),
                start: a.to_f64().unwrap_or(f64::NAN),
                end: b.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    fn segment_index(&self, t: T) -> Option<usize> {
        if self.segments.is_empty() {
            return None;
        }
        // first node strictly greater than t, minus one
        let idx = self.times.partition_point(|&s| s <= t);
        Some(idx.saturating_sub(1).min(self.segments.len() - 1))
    }

    /// Dense state and its time derivative at `t`.
    pub(crate) fn dense(&self, t: T) -> Result<(Vec<T>, Vec<T>)> {
        self.check_span(t)?;
        let Some(si) = self.segment_index(t) else {
            return Ok((self.states[0].clone(), self.derivs[0].clone()));
        };
        let seg = &self.segments[si];
        let m = self.state_dim;
        let theta = ((t - seg.t0) / seg.h).max(T::zero()).min(T::one());
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let th1 = one - theta;
        let c = &seg.coeffs;
        let mut y = Vec::with_capacity(m);
        let mut dy = Vec::with_capacity(m);
        for i in 0..m {
            let (r1, r2, r3, r4, r5) = (c[i], c[m + i], c[2 * m + i], c[3 * m + i], c[4 * m + i]);
            y.push(r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5))));
            let dp = r2
                + (one - two * theta) * r3
                + theta * (two - three * theta) * r4
                + two * theta * th1 * (one - two * theta) * r5;
            dy.push(dp / seg.h);
        }
        Ok((y, dy))
    }

    /// Interpolated position `x(t)`.
    pub fn position(&self, t: T) -> Result<Vec<T>> {
        let (y, _) = self.dense(t)?;
        Ok(self.position_of(&y))
    }

    /// Interpolated velocity `ẋ(t)`.
    pub fn velocity(&self, t: T) -> Result<Vec<T>> {
        let (y, dy) = self.dense(t)?;
        Ok(self.velocity_of(&y, &dy))
    }

    /// Local accepted step size around `t`.
    pub fn local_step(&self, t: T) -> T {
        match self.segment_index(t) {
            Some(i) => self.segments[i].h,
            None => T::zero(),
        }
    }

    /// `ẍ(t)` from the dense output. When the velocity is part of the state
    /// this is the derivative of its interpolant; otherwise a five-point finite
    /// difference of the dense velocity, with a stencil width tied to the
    /// local step (one-sided near the span ends).
    pub fn acceleration(&self, t: T) -> Result<Vec<T>> {
        self.check_span(t)?;
        if let VelocityRule::Embedded(n) = self.rule {
            let (_, dy) = self.dense(t)?;
            return Ok(dy[n..2 * n].to_vec());
        }
        let (a, b) = self.span();
        let n = self.dim();
        if b <= a {
            return Ok(vec![T::zero(); n]);
        }
        let delta = (self.local_step(t) * T::lit(0.5)).min((b - a) / T::lit(8.0));
        let twelve = T::lit(12.0);
        let two = T::lit(2.0);
        let vel = |s: T| self.velocity(s);
        if t - two * delta >= a && t + two * delta <= b {
            let (p2, p1, m1, m2) = (vel(t + two * delta)?, vel(t + delta)?, vel(t - delta)?, vel(t - two * delta)?);
            Ok((0..n)
                .map(|i| (-p2[i] + T::lit(8.0) * p1[i] - T::lit(8.0) * m1[i] + m2[i]) / (twelve * delta))
                .collect())
        } else {
            // forward (or backward) five-point stencil
            let sgn = if t - two * delta < a { T::one() } else { -T::one() };
            let h = sgn * delta;
            let f: Vec<Vec<T>> = (0..5)
                .map(|k| vel(t + T::from_usize_lossy(k) * h))
                .collect::<Result<_>>()?;
            let w = [-25.0, 48.0, -36.0, 16.0, -3.0];
            Ok((0..n)
                .map(|i| {
                    (0..5).map(|k| T::lit(w[k]) * f[k][i]).sum::<T>() / (twelve * h)
                })
                .collect())
        }
    }
}

// Dormand–Prince tableau (autonomous systems only, so the nodes c_i are not needed)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo<T: Scalar>(y: &[T], h: T, terms: &[(f64, &[T])]) -> Vec<T> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        let hc = h * T::lit(c);
        for (o, &ki) in out.iter_mut().zip(k) {
            *o += hc * ki;
        }
    }
    out
}

fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates the autonomous system `y' = rhs(y)` from `t = 0` to `t_end`.
///
/// `in_domain` is checked at every accepted state; a step that would leave it,
/// or whose stages cannot be evaluated, is shrunk until it either fits or falls
/// below the minimum step, at which point the trajectory stops with
/// [`Termination::DomainExit`]. `stop` runs after each accepted step and may end
/// the integration early ([`Termination::Converged`]) or abort it with an error.
pub(crate) fn dopri5<T, F, D, S>(
    rhs: F,
    in_domain: D,
    mut stop: S,
    y0: &[T],
    t_end: T,
    opts: &OdeOptions<T>,
    rule: VelocityRule,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<Vec<T>>,
    D: Fn(&[T]) -> bool,
    S: FnMut(T, &[T]) -> Result<bool>,
{
    let m = y0.len();
    if !in_domain(y0) || !all_finite(y0) {
        return Err(Error::OutOfDomain { point: to_f64_vec(y0) });
    }
    if !(t_end >= T::zero()) {
        return Err(Error::InvalidArgument("t_end must be non-negative".into()));
    }
    let k1_0 = rhs(y0)?;
    let mut traj = Trajectory {
        rule,
        state_dim: m,
        times: vec![T::zero()],
        states: vec![y0.to_vec()],
        derivs: vec![k1_0.clone()],
        segments: Vec::new(),
        termination: Termination::Completed,
    };
    if t_end == T::zero() {
        return Ok(traj);
    }

    let err_norm = |e: &[T], ya: &[T], yb: &[T]| -> T {
        let s: T = (0..m)
            .map(|i| {
                let sk = opts.atol + opts.rtol * ya[i].abs().max(yb[i].abs());
                let r = e[i] / sk;
                r * r
            })
            .sum();
        (s / T::from_usize_lossy(m.max(1))).sqrt()
    };

    let mut t = T::zero();
    let mut y = y0.to_vec();
    let mut k1 = k1_0;
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(&rhs, &y, &k1, t_end, opts),
    }
    .min(t_end);
    let mut steps = 0usize;
    let mut last_rejected = false;
    let mut shrink_for_domain = false;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let h_min = T::lit(16.0) * T::epsilon() * t.abs().max(T::one());
        if h < h_min {
            if shrink_for_domain {
                traj.termination = Termination::DomainExit;
                return Ok(traj);
            }
            return Err(Error::StepUnderflow {
                t: t.to_f64().unwrap_or(f64::NAN),
                h: h.to_f64().unwrap_or(f64::NAN),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let stages = (|| -> Result<_> {
            let y2 = combo(&y, h, &[(A21, &k1)]);
            let k2 = rhs(&y2)?;
            let y3 = combo(&y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = rhs(&y3)?;
            let y4 = combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = rhs(&y4)?;
            let y5 = combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = rhs(&y5)?;
            let y6 = combo(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = rhs(&y6)?;
            let y7 = combo(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            if !in_domain(&y7) || !all_finite(&y7) {
                return Err(Error::OutOfDomain { point: to_f64_vec(&y7) });
            }
            let k7 = rhs(&y7)?;
            Ok((k3, k4, k5, k6, y7, k7))
        })();

        let (k3, k4, k5, k6, y_new, k7) = match stages {
            Ok(s) if all_finite(&s.5) && all_finite(&s.4) => s,
            _ => {
                shrink_for_domain = true;
                h = h * T::lit(0.25);
                last_rejected = true;
                continue;
            }
        };

        let e = combo(
            &vec![T::zero(); m],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = err_norm(&e, &y, &y_new);
        if !err.is_finite() {
            shrink_for_domain = true;
            h = h * T::lit(0.25);
            last_rejected = true;
            continue;
        }

        if err <= T::one() {
            let ydiff: Vec<T> = (0..m).map(|i| y_new[i] - y[i]).collect();
            let bspl: Vec<T> = (0..m).map(|i| h * k1[i] - ydiff[i]).collect();
            let mut coeffs = Vec::with_capacity(5 * m);
            coeffs.extend_from_slice(&y);
            coeffs.extend_from_slice(&ydiff);
            coeffs.extend_from_slice(&bspl);
            coeffs.extend((0..m).map(|i| ydiff[i] - h * k7[i] - bspl[i]));
            coeffs.extend((0..m).map(|i| {
                h * (T::lit(D1) * k1[i]
                    + T::lit(D3) * k3[i]
                    + T::lit(D4) * k4[i]
                    + T::lit(D5) * k5[i]
                    + T::lit(D6) * k6[i]
                    + T::lit(D7) * k7[i])
            }));
            traj.segments.push(Segment { t0: t, h, coeffs });
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.derivs.push(k1.clone());
            shrink_for_domain = false;

            if stop(t, &y)? {
                traj.termination = Termination::Converged;
                return Ok(traj);
            }

            let mut fac = if err == T::zero() {
                T::lit(10.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(10.0)).max(T::lit(0.2))
            };
            if last_rejected {
                fac = fac.min(T::one());
            }
            last_rejected = false;
            h = h * fac;
        } else {
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * fac;
            last_rejected = true;
        }
    }
    Ok(traj)
}

fn initial_step<T, F>(rhs: &F, y0: &[T], f0: &[T], t_end: T, opts: &OdeOptions<T>) -> T
where
    T: Scalar,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let m = y0.len();
    let rms = |v: &[T]| -> T {
        let s: T = (0..m)
            .map(|i| {
                let sk = opts.atol + opts.rtol * y0[i].abs();
                let r = v[i] / sk;
                r * r
            })
            .sum();
        (s / T::from_usize_lossy(m.max(1))).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let small = T::lit(1e-5);
    let h0 = if d0 < small || d1 < small {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    let h0 = h0.min(t_end);
    let y1 = combo(y0, h0, &[(1.0, f0)]);
    let d2 = match rhs(&y1) {
        Ok(f1) => rms(&f1.iter().zip(f0).map(|(&a, &b)| a - b).collect::<Vec<_>>()) / h0,
        Err(_) => return h0 * T::lit(1e-3),
    };
    let dm = d1.max(d2);
    let h1 = if dm <= T::lit(1e-15) {
        T::lit(1e-6).max(h0 * T::lit(1e-3))
    } else {
        (T::lit(0.01) / dm).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).min(t_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never<T>(_: T, _: &[T]) -> Result<bool> {
        Ok(false)
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let traj = dopri5(
            |y: &[f64]| Ok(vec![-y[0]]),
            |_| true,
            never,
            &[1.0],
            3.0,
            &OdeOptions::with_tol(1e-10),
            VelocityRule::Derivative,
        )
        .unwrap();
        assert_eq!(traj.termination(), Termination::Completed);
        let xf = traj.final_position()[0];
        assert!((xf - (-3.0f64).exp()).abs() < 1e-9);
        // dense output between nodes
        for &t in &[0.013, 0.5, 1.2345, 2.999] {
            let x = traj.position(t).unwrap()[0];
            let v = traj.velocity(t).unwrap()[0];
            assert!((x - (-t).exp()).abs() < 1e-8, "x({t})");
            assert!((v + (-t).exp()).abs() < 1e-7, "v({t})");
            let a = traj.acceleration(t).unwrap()[0];
            assert!((a - (-t).exp()).abs() < 1e-5, "a({t}) = {a}");
        }
    }

    #[test]
    fn times_strictly_increase() {
        let traj = dopri5(
            |y: &[f64]| Ok(vec![y[1], -y[0]]),
            |_| true,
            never,
            &[1.0, 0.0],
            10.0,
            &OdeOptions::with_tol(1e-8),
            VelocityRule::Embedded(1),
        )
        .unwrap();
        assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
        let x = traj.position(std::f64::consts::PI).unwrap()[0];
        assert!((x + 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_exit_is_flagged() {
        // x' = 1 on the domain x < 1
        let traj = dopri5(
            |_: &[f64]| Ok(vec![1.0]),
            |y| y[0] < 1.0,
            never,
            &[0.0],
            5.0,
            &OdeOptions::with_tol(1e-8),
            VelocityRule::Derivative,
        )
        .unwrap();
        assert_eq!(traj.termination(), Termination::DomainExit);
        let (_, b) = traj.span();
        assert!(b < 1.0 && b > 0.99, "stopped at {b}");
    }

    #[test]
    fn out_of_span_is_an_error() {
        let traj = dopri5(
            |y: &[f64]| Ok(vec![-y[0]]),
            |_| true,
            never,
            &[1.0],
            1.0,
            &OdeOptions::with_tol(1e-8),
            VelocityRule::Derivative,
        )
        .unwrap();
        assert!(matches!(traj.position(1.5), Err(Error::OutOfSpan { .. })));
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let run = || {
            dopri5(
                |y: &[f64]| Ok(vec![y[1], -y[0].sin()]),
                |_| true,
                never,
                &[1.0, 0.0],
                7.0,
                &OdeOptions::with_tol(1e-9),
                VelocityRule::Embedded(1),
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.times(), b.times());
        assert_eq!(a.final_position(), b.final_position());
    }
}
