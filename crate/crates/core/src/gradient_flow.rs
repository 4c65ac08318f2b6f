//! Equidistant initial conditions and the paired relaxation comparison.
//!
//! Two gradient-descent curves starting on a common level `f = c` are compared
//! through `Δf(t) = f(γ₂(t)) − f(γ₁(t))`. At the times where their speeds
//! coincide the sign of `d²Δf/dt²` is fixed by the cubic-form gap
//! `C(γ̇₂, γ̇₂, γ̇₂) − C(γ̇₁, γ̇₁, γ̇₁)`, so a positive gap at every such time
//! makes `γ₁` relax faster.

use crate::error::{Error, Result};
use crate::manifold::{
    directional, integrate_flow, integrate_flow_until_converged, norm, FlowOptions, MetricField, ScalarPotential,
    Trajectory,
};
use crate::scalar::Scalar;
use crate::straightening::nonmetricity_cubic;

/// Tolerance on `|f(x_i) − c|` for a valid pair.
pub const LEVEL_TOL: f64 = 1e-10;
/// Roots of the speed difference are refined to this width in `t`.
pub const ROOT_TOL: f64 = 1e-9;
/// Allowed undershoot of `Δf` before a sample counts as a sign violation.
pub const DELTA_F_FLOOR: f64 = 1e-9;
/// Speed-difference roots are ignored once both speeds fall below this
/// fraction of the initial speed; beyond it the difference is integration noise.
pub const SPEED_GUARD: f64 = 1e-9;
/// Uniform samples added to the merged integrator nodes.
pub const DEFAULT_GRID: usize = 2001;

/// Two initial conditions on one level set of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidistantPair<T> {
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub level: T,
}

impl<T: Scalar> EquidistantPair<T> {
    /// Validates `|f(x_i) − level| < 1e-10` and `level > f(q)`.
    pub fn new<P: ScalarPotential<T> + ?Sized>(f: &P, x1: Vec<T>, x2: Vec<T>, level: T) -> Result<Self> {
        let tol = level_tol::<T>(level);
        for x in [&x1, &x2] {
            let v = f.value(x);
            if !((v - level).abs() < tol) {
                return Err(Error::InvalidArgument(format!(
                    "point is not on the level {level}: f = {v}"
                )));
            }
        }
        if let Some(q) = f.minimizer() {
            if !(level > f.value(&q)) {
                return Err(Error::DegenerateLevel(format!("level {level} is not above the minimum")));
            }
        }
        Ok(Self { x1, x2, level })
    }
}

fn level_tol<T: Scalar>(level: T) -> T {
    T::lit(LEVEL_TOL).max(T::epsilon() * T::lit(64.0) * level.abs().max(T::one()))
}

/// Points `q + s_i d_i` with `f = c`, found by bracketing along each ray,
/// bisection and a Newton polish.
pub fn equidistant_seed<T, M, P>(g: &M, f: &P, level: T, d1: &[T], d2: &[T]) -> Result<EquidistantPair<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    let q = f.minimizer().ok_or(Error::MissingMinimizer)?;
    crate::manifold::ensure_in_domain(g, &q)?;
    let fq = f.value(&q);
    if !(level > fq) {
        return Err(Error::DegenerateLevel(format!("level {level} is not above f(q) = {fq}")));
    }
    let x1 = level_crossing(g, f, &q, d1, level)?;
    let x2 = level_crossing(g, f, &q, d2, level)?;
    Ok(EquidistantPair { x1, x2, level })
}

fn level_crossing<T, M, P>(g: &M, f: &P, q: &[T], d: &[T], level: T) -> Result<Vec<T>>
where
    T: Scalar,
    M: MetricField<T> + ?Sized,
    P: ScalarPotential<T> + ?Sized,
{
    if d.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: d.len() });
    }
    let dn = crate::scalar::norm(d);
    if !(dn > T::zero()) || !dn.is_finite() {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let dir: Vec<T> = d.iter().map(|&v| v / dn).collect();
    let at = |s: T| -> Vec<T> { q.iter().zip(&dir).map(|(&qi, &di)| qi + s * di).collect() };
    let phi = |s: T| f.value(&at(s)) - level;
    let unreachable = || Error::LevelUnreachable {
        level: level.to_f64().unwrap_or(f64::NAN),
    };

    // bracket [lo, hi] with phi(lo) < 0 ≤ phi(hi), all inside the chart
    let scale = q.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let mut lo = T::zero();
    let mut hi = scale * T::lit(1e-3);
    let mut found = false;
    for _ in 0..200 {
        let p = at(hi);
        if g.contains(&p) {
            let v = phi(hi);
            if v >= T::zero() {
                found = true;
                break;
            }
            lo = hi;
            hi = hi * T::lit(2.0);
        } else {
            // approach the chart boundary from inside
            let mut inside = lo;
            let mut outside = hi;
            for _ in 0..200 {
                let mid = T::lit(0.5) * (inside + outside);
                if mid <= inside || mid >= outside {
                    break;
                }
                if g.contains(&at(mid)) {
                    if phi(mid) >= T::zero() {
                        hi = mid;
                        found = true;
                        break;
                    }
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            lo = inside;
            break;
        }
        if !hi.is_finite() {
            break;
        }
    }
    if !found {
        return Err(unreachable());
    }

    let tol = level_tol::<T>(level) * T::lit(0.5);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= T::lit(1e-6) * hi.abs().max(T::epsilon()) {
            break;
        }
    }
    // safeguarded Newton, run down to round-off
    let floor = T::epsilon() * T::lit(4.0) * level.abs().max(T::one());
    let mut s = T::lit(0.5) * (lo + hi);
    for _ in 0..50 {
        let v = phi(s);
        if v.abs() <= floor {
            break;
        }
        if v < T::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let slope = directional(f, &at(s), &dir);
        let newton = s - v / slope;
        let next = if slope != T::zero() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        if (next - s).abs() <= T::epsilon() * s.abs() {
            break;
        }
        s = next;
    }
    let v = phi(s);
    if v.abs() < tol {
        Ok(at(s))
    } else {
        Err(Error::RootNotFound(format!("level crossing residual {v}")))
    }
}

/// How long the two flows are integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon<T> {
    Fixed(T),
    /// Until both gradient norms fall below the threshold.
    Converged(FlowOptions<T>),
}

impl<T: Scalar> Default for Horizon<T> {
    fn default() -> Self {
        Horizon::Converged(FlowOptions::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions<T> {
    /// Constant pregeodesic factor `λ` of the straightening connection.
    pub factor: T,
    pub horizon: Horizon<T>,
    pub tol: T,
    /// Uniform samples added to the integrator nodes.
    pub grid: usize,
}

impl<T: Scalar> Default for CompareOptions<T> {
    fn default() -> Self {
        Self {
            factor: T::zero(),
            horizon: Horizon::default(),
            tol: T::lit(1e-10),
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Curve1Faster,
    Curve2Faster,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Curve1Faster => "curve1-faster",
            Verdict::Curve2Faster => "curve2-faster",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time where `‖γ̇₁‖ = ‖γ̇₂‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coincidence<T> {
    pub t: T,
    pub speed: T,
    pub cubic1: T,
    pub cubic2: T,
}

impl<T: Scalar> Coincidence<T> {
    /// `C(γ̇₂, γ̇₂, γ̇₂) − C(γ̇₁, γ̇₁, γ̇₁)`.
    pub fn gap(&self) -> T {
        self.cubic2 - self.cubic1
    }
}

/// One row of the comparison grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub t: T,
    pub f1: T,
    pub f2: T,
    pub speed1: T,
    pub speed2: T,
}

impl<T: Scalar> GridPoint<T> {
    /// `f(γ₂(t)) − f(γ₁(t))`.
    pub fn delta_f(&self) -> T {
        self.f2 - self.f1
    }
}

#[derive(Debug, Clone)]
pub struct AsymmetryReport<T> {
    pub level: T,
    pub factor: T,
    pub grid: Vec<GridPoint<T>>,
    pub coincidences: Vec<Coincidence<T>>,
    pub verdict: Verdict,
    /// `|Δf| ≤ 1e-9` everywhere on the grid.
    pub symmetric: bool,
    pub min_delta_f: T,
    pub max_abs_delta_f: T,
    pub notes: Vec<String>,
    pub curve1: Trajectory<T>,
    pub curve2: Trajectory<T>,
}

impl<T: Scalar> AsymmetryReport<T> {
    /// `Δf` by linear interpolation on the grid.
    pub fn delta_f_at(&self, t: T) -> Option<T> {
        let i = self.grid.partition_point(|p| p.t < t);
        if i >= self.grid.len() {
            return None;
        }
        if self.grid[i].t == t || i == 0 {
            return (self.grid[i].t == t).then(|| self.grid[i].delta_f());
        }
        let (a, b) = (&self.grid[i - 1], &self.grid[i]);
        let w = (t - a.t) / (b.t - a.t);
        Some(a.delta_f() + w * (b.delta_f() - a.delta_f()))
    }

    pub fn all_gaps_positive(&self) -> bool {
        !self.coincidences.is_empty() && self.coincidences.iter().all(|c| c.gap() > T::zero())
    }
}

fn run_flows<T, M, P>(g: &M, f: &P, pair: &EquidistantPair<T>, horizon: Horizon<T>, tol: T) -> Result<(Trajectory<T>, Trajectory<T>)>
where
    T: Scalar,
    M: MetricField<T>,
    P: ScalarPotential<T>,
{
    match horizon {
        Horizon::Fixed(t_end) => {
            let (a, b) = rayon::join(
                || integrate_flow(g, f, &pair.x1, t_end, tol),
                || integrate_flow(g, f, &pair.x2, t_end, tol),
            );
            Ok((a?, b?))
        }
        Horizon::Converged(opts) => {
            let (a, b) = rayon::join(
                || integrate_flow_until_converged(g, f, &pair.x1, tol, &opts),
                || integrate_flow_until_converged(g, f, &pair.x2, tol, &opts),
            );
            let (a, b) = (a?, b?);
            let (ea, eb) = (a.span().1, b.span().1);
            // extend the earlier finisher to the common horizon
            if ea < eb {
                Ok((integrate_flow(g, f, &pair.x1, eb, tol)?, b))
            } else if eb < ea {
                Ok((a, integrate_flow(g, f, &pair.x2, ea, tol)?))
            } else {
                Ok((a, b))
            }
        }
    }
}

/// Integrates both flows and assembles the report.
pub fn compare<T, M, P>(g: &M, f: &P, pair: &EquidistantPair<T>, opts: &CompareOptions<T>) -> Result<AsymmetryReport<T>>
where
    T: Scalar,
    M: MetricField<T>,
    P: ScalarPotential<T>,
{
    let (curve1, curve2) = run_flows(g, f, pair, opts.horizon, opts.tol)?;
    let mut notes = Vec::new();
    let end = curve1.span().1.min(curve2.span().1);
    for (name, c) in [("curve1", &curve1), ("curve2", &curve2)] {
        if c.termination() == crate::manifold::Termination::DomainExit {
            notes.push(format!("{name} left the chart at t = {}", c.span().1));
        }
    }

    let times = merged_grid(&curve1, &curve2, end, opts.grid);
    let speed = |c: &Trajectory<T>, t: T| -> Result<T> {
        let x = c.position(t)?;
        Ok(norm(g, &x, &c.velocity(t)?))
    };
    let grid = times
        .iter()
        .map(|&t| {
            let x1 = curve1.position(t)?;
            let x2 = curve2.position(t)?;
            Ok(GridPoint {
                t,
                f1: f.value(&x1),
                f2: f.value(&x2),
                speed1: speed(&curve1, t)?,
                speed2: speed(&curve2, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let min_delta_f = grid.iter().map(|p| p.delta_f()).fold(T::infinity(), T::min);
    let max_abs_delta_f = grid.iter().map(|p| p.delta_f().abs()).fold(T::zero(), T::max);
    let floor = T::lit(DELTA_F_FLOOR);
    let symmetric = max_abs_delta_f <= floor;

    let mut coincidences = Vec::new();
    if symmetric {
        notes.push("delta_f vanishes on the grid; relaxation is symmetric".into());
    } else {
        let s_ref = grid
            .first()
            .map(|p| p.speed1.max(p.speed2))
            .unwrap_or(T::zero());
        let guard = T::lit(SPEED_GUARD) * s_ref;
        let diff = |t: T| -> Result<T> { Ok(speed(&curve1, t)? - speed(&curve2, t)?) };
        let mut roots = Vec::new();
        if let Some(p0) = grid.first() {
            if (p0.speed1 - p0.speed2).abs() <= T::lit(ROOT_TOL) * s_ref.max(T::one()) {
                roots.push(p0.t);
            }
        }
        for w in grid.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.speed1.max(a.speed2) < guard || b.speed1.max(b.speed2) < guard {
                break;
            }
            let (da, db) = (a.speed1 - a.speed2, b.speed1 - b.speed2);
            if da == T::zero() || da * db >= T::zero() {
                continue;
            }
            roots.push(bisect(&diff, a.t, b.t, da)?);
        }
        for t in roots {
            let cubic1 = nonmetricity_cubic(g, opts.factor, &curve1, t)?;
            let cubic2 = nonmetricity_cubic(g, opts.factor, &curve2, t)?;
            coincidences.push(Coincidence {
                t,
                speed: speed(&curve1, t)?,
                cubic1,
                cubic2,
            });
        }
        if coincidences.is_empty() {
            notes.push("speeds never coincide after t = 0; the cubic criterion is not exercised".into());
        }
    }

    let verdict = if symmetric || coincidences.is_empty() {
        Verdict::Inconclusive
    } else if coincidences.iter().all(|c| c.gap() > T::zero()) && min_delta_f >= -floor {
        Verdict::Curve1Faster
    } else if coincidences.iter().all(|c| c.gap() < T::zero())
        && grid.iter().all(|p| p.delta_f() <= floor)
    {
        Verdict::Curve2Faster
    } else {
        notes.push("cubic gaps have mixed signs or contradict the sampled delta_f".into());
        Verdict::Inconclusive
    };

    Ok(AsymmetryReport {
        level: pair.level,
        factor: opts.factor,
        grid,
        coincidences,
        verdict,
        symmetric,
        min_delta_f,
        max_abs_delta_f,
        notes,
        curve1,
        curve2,
    })
}

fn merged_grid<T: Scalar>(c1: &Trajectory<T>, c2: &Trajectory<T>, end: T, uniform: usize) -> Vec<T> {
    let mut times: Vec<T> = c1
        .times()
        .iter()
        .chain(c2.times())
        .copied()
        .filter(|&t| t <= end)
        .collect();
    let n = uniform.max(2);
    let denom = T::from_usize_lossy(n - 1);
    times.extend((0..n).map(|i| (end * T::from_usize_lossy(i) / denom).min(end)));
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times
}

fn bisect<T: Scalar>(h: &impl Fn(T) -> Result<T>, mut lo: T, mut hi: T, h_lo: T) -> Result<T> {
    let positive_lo = h_lo > T::zero();
    let tol = T::lit(ROOT_TOL);
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (h(mid)? > T::zero()) == positive_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// Numerical witness of symmetric relaxation: `max_t |Δf(t)| < 1e-7 (c − f(q))`
/// (or `1e-7 c` when the minimiser is unknown).
pub fn metric_symmetry_check<T, M, P>(g: &M, f: &P, pair: &EquidistantPair<T>, horizon: Horizon<T>, tol: T) -> Result<bool>
where
    T: Scalar,
    M: MetricField<T>,
    P: ScalarPotential<T>,
{
    let (c1, c2) = run_flows(g, f, pair, horizon, tol)?;
    let end = c1.span().1.min(c2.span().1);
    let height = match f.minimizer() {
        Some(q) => pair.level - f.value(&q),
        None => pair.level,
    };
    let mut worst = T::zero();
    for t in merged_grid(&c1, &c2, end, DEFAULT_GRID) {
        let d = f.value(&c2.position(t)?) - f.value(&c1.position(t)?);
        worst = worst.max(d.abs());
    }
    Ok(worst < T::lit(1e-7) * height.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{Euclidean, Quadratic};

    fn quad() -> (Euclidean, Quadratic<f64>) {
        (Euclidean { dim: 2 }, Quadratic::isotropic(vec![0.0, 0.0]))
    }

    #[test]
    fn seeds_on_the_unit_circle() {
        let (g, f) = quad();
        let pair = equidistant_seed(&g, &f, 0.5, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((pair.x1[0] - 1.0).abs() < 1e-10 && pair.x1[1].abs() < 1e-15);
        assert!((pair.x2[1] - 1.0).abs() < 1e-10 && pair.x2[0].abs() < 1e-15);
    }

    #[test]
    fn degenerate_level_is_rejected() {
        let (g, f) = quad();
        assert!(matches!(
            equidistant_seed(&g, &f, 0.0, &[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::DegenerateLevel(_))
        ));
    }

    #[test]
    fn zero_direction_is_rejected() {
        let (g, f) = quad();
        assert!(equidistant_seed(&g, &f, 0.5, &[0.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rotational_symmetry_gives_inconclusive_symmetric() {
        let (g, f) = quad();
        let pair = equidistant_seed(&g, &f, 0.5, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let r = compare(&g, &f, &pair, &CompareOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.symmetric);
        assert!(r.max_abs_delta_f < 1e-12);
    }

    #[test]
    fn identical_seeds_give_exactly_zero() {
        let (g, f) = quad();
        let pair = EquidistantPair::new(&f, vec![0.6, 0.8], vec![0.6, 0.8], 0.5).unwrap();
        let opts = CompareOptions {
            horizon: Horizon::Fixed(5.0),
            ..CompareOptions::default()
        };
        let r = compare(&g, &f, &pair, &opts).unwrap();
        assert!(r.grid.iter().all(|p| p.delta_f() == 0.0));
        assert!(metric_symmetry_check(&g, &f, &pair, Horizon::Fixed(5.0), 1e-10).unwrap());
    }

    #[test]
    fn off_level_pair_is_rejected() {
        let (_, f) = quad();
        assert!(EquidistantPair::new(&f, vec![1.0, 0.0], vec![0.0, 1.1], 0.5).is_err());
    }

    #[test]
    fn grid_is_sorted_and_covers_the_span() {
        let (g, f) = quad();
        let a = integrate_flow(&g, &f, &[1.0, 0.0], 2.0, 1e-9).unwrap();
        let b = integrate_flow(&g, &f, &[0.0, 1.0], 2.0, 1e-9).unwrap();
        let ts = merged_grid(&a, &b, 2.0, 11);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 2.0);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
}
