//! Invariant batteries run by `verify`. Each check reports a measured value
//! against a bound, so a failure says by how much it missed.

use geoflow_core::dually_flat::{
    canonical_divergence, fujiwara_amari_residual, legendre_dual, ExponentialModel, GaussianLogPartition, HessianModel,
    LegendreDual, QuadraticModel,
};
use geoflow_core::fixtures::{Euclidean, Quadratic, Sphere, SphereHeight};
use geoflow_core::gaussian_chain::{
    analytic_variance, cubic_closed_form, equidistant_temperatures, potential_f, scalar_curvature_mode,
    scalar_curvature_mode_numeric, spectrum, universal_asymmetry_experiment, ChainMetric, ChainPotential, ChainSpec,
};
use geoflow_core::gradient_flow::{compare, equidistant_seed, CompareOptions, Horizon, Verdict};
use geoflow_core::manifold::{
    christoffel_levi_civita, constrained_minimizer, gradient, integrate_flow, integrate_geodesic, AffineSubspace,
    Connection, LeviCivita, MetricField, ScalarPotential, Trajectory,
};
use geoflow_core::straightening::{
    nonmetricity, nonmetricity_cubic, projection_orthogonality, RicciContraction, StraighteningConnection,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::Table;
use crate::config::{Fault, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `value < bound`
    Below,
    /// `value ≥ bound`
    AtLeast,
    /// `value > bound`
    Above,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    /// Set when the computation itself failed.
    pub error: Option<String>,
}

impl Check {
    fn measured(suite: Suite, name: &'static str, value: f64, relation: Relation, bound: f64) -> Self {
        Self {
            suite,
            name,
            value,
            bound,
            relation,
            error: None,
        }
    }

    fn from_result(
        suite: Suite,
        name: &'static str,
        relation: Relation,
        bound: f64,
        r: geoflow_core::Result<f64>,
    ) -> Self {
        match r {
            Ok(v) => Self::measured(suite, name, v, relation, bound),
            Err(e) => Self {
                error: Some(e.to_string()),
                ..Self::measured(suite, name, f64::NAN, relation, bound)
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none()
            && match self.relation {
                Relation::Below => self.value < self.bound,
                Relation::AtLeast => self.value >= self.bound,
                Relation::Above => self.value > self.bound,
            }
    }

    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => format!("[{status}] {}/{}: error: {e}", self.suite.name(), self.name),
            None => format!(
                "[{status}] {}/{}: {:.3e} {} {:.0e}",
                self.suite.name(),
                self.name,
                self.value,
                self.relation.symbol(),
                self.bound
            ),
        }
    }
}

pub fn table(checks: &[Check]) -> Table {
    let mut t = Table::new("checks", &["suite", "check", "value", "relation", "bound", "status"]);
    for c in checks {
        t.push(vec![
            c.suite.name().into(),
            c.name.into(),
            c.value.into(),
            c.relation.symbol().into(),
            c.bound.into(),
            (if c.passed() { "pass" } else { "fail" }).into(),
        ]);
    }
    t
}

/// Runs the selected suites in the order given.
pub fn run(suites: &[Suite], seed: u64, fault: Option<Fault>) -> Vec<Check> {
    suites
        .par_iter()
        .map(|&s| {
            let seed = seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(s as u64 + 1));
            match s {
                Suite::Manifold => manifold(seed),
                Suite::Straightening => straightening(seed, fault),
                Suite::GradientFlow => gradient_flow(seed),
                Suite::FujiwaraAmari => dually_flat(seed),
                Suite::GaussianChain => gaussian_chain(),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn sphere_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0)]
}

fn fold_max(it: impl IntoIterator<Item = geoflow_core::Result<f64>>) -> geoflow_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for v in it {
        let v = v?;
        worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
    }
    Ok(worst)
}

// ---------------------------------------------------------------- manifold

fn manifold(seed: u64) -> Vec<Check> {
    let suite = Suite::Manifold;
    let mut r = rng(seed);
    let sphere = Sphere { radius: 1.5f64 };
    let height = SphereHeight::new(1.5);

    // ∂_k g_ij = Γ_{i,kj}-style lowered coefficients, both slots
    let points: Vec<Vec<f64>> = (0..50).map(|_| sphere_point(&mut r)).collect();
    let compat = fold_max(points.iter().map(|x| {
        let gamma = christoffel_levi_civita(&sphere, x)?;
        let g = sphere.metric(x);
        let dg = sphere.metric_partials(x);
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let lowered = |a: usize, b: usize| (0..2).map(|m| g[(a, m)] * gamma.get(m, k, b)).sum::<f64>();
                    worst = worst.max((dg[k][(i, j)] - lowered(i, j) - lowered(j, i)).abs());
                }
            }
        }
        Ok(worst)
    }));

    let duality = fold_max(points.iter().map(|x| {
        let v = random_vec(&mut rng(seed ^ x[0].to_bits()), 2);
        let gr = gradient(&sphere, &height, x)?;
        let lhs = sphere.metric(x).bilinear(&gr, &v);
        let rhs: f64 = height.differential(x).iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok((lhs - rhs).abs() / rhs.abs().max(1e-3))
    }));

    // quarter turn along the equator of the unit sphere
    let unit = Sphere { radius: 1.0f64 };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let geodesic = integrate_geodesic(&LeviCivita(unit), &[half_pi, 0.0], &[0.0, 1.0], half_pi, 1e-12)
        .and_then(|traj| traj.position(half_pi))
        .map(|x| (x[0] - half_pi).abs().max((x[1] - half_pi).abs()));

    let sp = spectrum(&ChainSpec::new(4, 1.0f64).expect("valid chain"));
    let flow = (|| {
        let g = ChainMetric { modes: sp.len() };
        let f = ChainPotential::new(sp.clone());
        let t_end = 5.0 / sp.lambdas[0];
        let traj = integrate_flow(&g, &f, &sp.scaled_equilibrium(3.0), t_end, 1e-12)?;
        fold_max((0..=40).map(|i| {
            let t = t_end * i as f64 / 40.0;
            let a = traj.position(t)?;
            Ok((0..sp.len())
                .map(|k| {
                    let want = analytic_variance(&sp, 3.0, k, t);
                    (a[k] - want).abs() / want
                })
                .fold(0.0, f64::max))
        }))
    })();

    vec![
        Check::from_result(suite, "levi-civita-compatibility", Relation::Below, 1e-10, compat),
        Check::from_result(suite, "gradient-duality", Relation::Below, 1e-12, duality),
        Check::from_result(suite, "equator-geodesic", Relation::Below, 1e-8, geodesic),
        Check::from_result(suite, "flow-vs-closed-form", Relation::Below, 1e-8, flow),
    ]
}

// ---------------------------------------------------------- straightening

/// Largest pregeodesic residual over `count` random non-critical points.
pub fn max_pregeodesic_residual<M, P>(
    g: M,
    f: P,
    factor: f64,
    count: usize,
    mut sample: impl FnMut() -> Vec<f64>,
) -> geoflow_core::Result<f64>
where
    M: MetricField<f64> + Clone,
    P: ScalarPotential<f64> + Clone,
{
    let conn = StraighteningConnection::new(g, f).with_factor(factor);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < count {
        let x = sample();
        if !conn.contains(&x) {
            continue;
        }
        worst = worst.max(conn.pregeodesic_residual(&x)?);
        used += 1;
    }
    Ok(worst)
}

/// Criterion-sized pregeodesic sweep on the four reference fixtures.
pub fn pregeodesic_battery(seed: u64, count: usize) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for factor in [0.0, 1.0] {
        let quad = Quadratic::weighted(vec![0.2, -0.4], vec![1.0, 3.0]);
        worst = worst.max(max_pregeodesic_residual(Euclidean { dim: 2 }, quad, factor, count, || {
            random_vec(&mut r, 2)
        })?);
        let sp1 = spectrum(&ChainSpec::new(2, 1.0f64)?);
        worst = worst.max(max_pregeodesic_residual(
            ChainMetric { modes: 1 },
            ChainPotential::new(sp1),
            factor,
            count,
            || vec![r.gen_range(0.05..5.0)],
        )?);
        let sp2 = spectrum(&ChainSpec::new(3, 1.0f64)?);
        worst = worst.max(max_pregeodesic_residual(
            ChainMetric { modes: 2 },
            ChainPotential::new(sp2),
            factor,
            count,
            || vec![r.gen_range(0.1..8.0), r.gen_range(0.05..3.0)],
        )?);
        worst = worst.max(max_pregeodesic_residual(
            Sphere { radius: 1.0f64 },
            SphereHeight::new(1.0),
            factor,
            count,
            || sphere_point(&mut r),
        )?);
    }
    Ok(worst)
}

/// Relative gap between the definition-based non-metricity and the closed
/// form; `fault` flips the sign of the closed form's second term.
pub fn nonmetricity_battery(seed: u64, count: usize, fault: Option<Fault>) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    let sp = spectrum(&ChainSpec::new(4, 1.0f64)?);
    let mut worst: f64 = 0.0;
    for factor in [0.0, 1.0] {
        let sphere = StraighteningConnection::new(Sphere { radius: 1.0f64 }, SphereHeight::new(1.0)).with_factor(factor);
        let chain = StraighteningConnection::new(ChainMetric { modes: 3 }, ChainPotential::new(sp.clone())).with_factor(factor);
        for _ in 0..count {
            let x = sphere_point(&mut r);
            worst = worst.max(closed_form_gap(&sphere, &Sphere { radius: 1.0 }, &x, &mut r, fault)?);
            let a: Vec<f64> = (0..3).map(|_| r.gen_range(0.1..6.0)).collect();
            worst = worst.max(closed_form_gap(&chain, &ChainMetric { modes: 3 }, &a, &mut r, fault)?);
        }
    }
    Ok(worst)
}

fn closed_form_gap<M, P>(
    conn: &StraighteningConnection<M, P, f64>,
    g: &M,
    x: &[f64],
    r: &mut ChaCha8Rng,
    fault: Option<Fault>,
) -> geoflow_core::Result<f64>
where
    M: MetricField<f64>,
    P: ScalarPotential<f64>,
{
    let n = x.len();
    let (w, xv, y) = (random_vec(r, n), random_vec(r, n), random_vec(r, n));
    let def = nonmetricity(conn, g, x, &w, &xv, &y)?;
    let mut closed = conn.nonmetricity_closed_form(x, &w, &xv, &y)?;
    let gm = g.metric(x);
    let z = conn.z_field(x)?;
    if fault == Some(Fault::NonmetricitySign) {
        closed -= 2.0 * gm.bilinear(&w, &y) * gm.bilinear(&xv, &z);
    }
    let nn = |v: &[f64]| gm.bilinear(v, v).sqrt();
    let scale = (nn(&w) * nn(&xv) * nn(&y) * nn(&z)).max(closed.abs()).max(1e-300);
    Ok((def - closed).abs() / scale)
}

/// `|C(e₁,e₂,e₁) − C(e₂,e₁,e₁)|` on the 2-mode chain at twice equilibrium.
pub fn symmetry_witness() -> geoflow_core::Result<f64> {
    let sp = spectrum(&ChainSpec::new(3, 1.0f64)?);
    let g = ChainMetric { modes: 2 };
    let conn = StraighteningConnection::new(g, ChainPotential::new(sp.clone()));
    let x = sp.scaled_equilibrium(2.0);
    let (e1, e2) = ([1.0, 0.0], [0.0, 1.0]);
    Ok((nonmetricity(&conn, &g, &x, &e1, &e2, &e1)? - nonmetricity(&conn, &g, &x, &e2, &e1, &e1)?).abs())
}

/// Largest relative residual of `f̈ + C + 2λḟ = 0` along integrated flows.
pub fn identity_battery() -> geoflow_core::Result<f64> {
    let sp = spectrum(&ChainSpec::new(3, 1.0f64)?);
    let a = identity_residual(&Euclidean { dim: 2 }, &Quadratic::weighted(vec![0.0, 0.0], vec![1.0, 4.0]), &[1.0, 1.0], 1.0)?;
    let b = identity_residual(&Sphere { radius: 1.0f64 }, &SphereHeight::new(1.0), &[0.4, 0.5], 2.0)?;
    let c = identity_residual(&ChainMetric { modes: 2 }, &ChainPotential::new(sp.clone()), &sp.scaled_equilibrium(3.0), 1.5)?;
    Ok(a.max(b).max(c))
}

fn identity_residual<M, P>(g: &M, f: &P, x0: &[f64], t_end: f64) -> geoflow_core::Result<f64>
where
    M: MetricField<f64>,
    P: ScalarPotential<f64>,
{
    let traj = integrate_flow(g, f, x0, t_end, 1e-13)?;
    let h = 1e-3 * t_end;
    let mut worst: f64 = 0.0;
    for factor in [0.0, 1.0] {
        for i in 1..10 {
            let t = t_end * i as f64 / 10.0;
            let (d1, d2) = f_derivatives(f, &traj, t, h)?;
            let c = nonmetricity_cubic(g, factor, &traj, t)?;
            let scale = d2.abs().max(c.abs()).max((2.0 * factor * d1).abs());
            worst = worst.max((d2 + c + 2.0 * factor * d1).abs() / scale);
        }
    }
    Ok(worst)
}

/// `(ḟ, f̈)` of `f(γ(t))` from five-point stencils.
fn f_derivatives<P: ScalarPotential<f64>>(f: &P, traj: &Trajectory<f64>, t: f64, h: f64) -> geoflow_core::Result<(f64, f64)> {
    let v = |s: f64| traj.position(s).map(|x| f.value(&x));
    let (p2, p1, c, m1, m2) = (v(t + 2.0 * h)?, v(t + h)?, v(t)?, v(t - h)?, v(t - 2.0 * h)?);
    Ok((
        (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h),
        (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h),
    ))
}

/// `(worst residual at the minimisers, weakest negative control)`.
pub fn projection_battery() -> geoflow_core::Result<(f64, f64)> {
    let g = Euclidean { dim: 2 };
    let f = Quadratic::weighted(vec![0.0, 0.0], vec![1.0, 5.0]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let line = AffineSubspace {
        origin: vec![1.0, 0.0],
        basis: vec![vec![s, s]],
    };
    let u = constrained_minimizer(&g, &f, &line, &[0.3], 1e-12, 1e-10)?;
    let r1 = projection_orthogonality(&g, &f, &line, &u)?;
    let n1 = projection_orthogonality(&g, &f, &line, &[u[0] + 1.0])?;

    let sp = spectrum(&ChainSpec::new(3, 1.0f64)?);
    let gm = ChainMetric { modes: 2 };
    let fc = ChainPotential::new(sp.clone());
    let slice = AffineSubspace::coordinate_slice(vec![1.5 * sp.a_star[0], 0.0], 0);
    let u = constrained_minimizer(&gm, &fc, &slice, &[2.0], 1e-12, 1e-10)?;
    let r2 = projection_orthogonality(&gm, &fc, &slice, &u)?;
    let n2 = projection_orthogonality(&gm, &fc, &slice, &[3.0 * sp.a_star[1]])?;
    Ok((r1.max(r2), n1.min(n2)))
}

fn straightening(seed: u64, fault: Option<Fault>) -> Vec<Check> {
    let suite = Suite::Straightening;
    let projection = projection_battery();
    let (proj, control) = match projection {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    vec![
        Check::from_result(suite, "pregeodesic-residual", Relation::Below, 1e-8, pregeodesic_battery(seed, 100)),
        Check::from_result(
            suite,
            "nonmetricity-closed-form",
            Relation::Below,
            1e-8,
            nonmetricity_battery(seed.wrapping_add(1), 50, fault),
        ),
        Check::from_result(suite, "nonmetricity-asymmetry-witness", Relation::Above, 1e-3, symmetry_witness()),
        Check::from_result(suite, "second-derivative-identity", Relation::Below, 1e-5, identity_battery()),
        Check::from_result(suite, "projection-orthogonality", Relation::Below, 1e-6, proj),
        Check::from_result(suite, "projection-negative-control", Relation::AtLeast, 0.1, control),
    ]
}

// ---------------------------------------------------------- gradient flow

/// Largest `max_t |Δf| / level` for isotropic Euclidean quadratics over
/// random direction pairs; zero in exact arithmetic.
pub fn metric_corollary_battery(seed: u64, pairs: usize) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    let g = Euclidean { dim: 3 };
    let f = Quadratic::isotropic(vec![0.5, -0.25, 1.0]);
    let jobs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| (r.gen_range(0.1..2.0), random_vec(&mut r, 3), random_vec(&mut r, 3)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|(level, d1, d2)| {
            let pair = equidistant_seed(&g, &f, *level, d1, d2)?;
            let report = compare(&g, &f, &pair, &CompareOptions::default())?;
            Ok(report.max_abs_delta_f / level)
        })
        .collect::<Vec<_>>();
    fold_max(values)
}

/// Smallest cubic gap at the coincidences of single-mode warming against
/// cooling; positive when the criterion orders them correctly.
fn single_mode_gap() -> geoflow_core::Result<f64> {
    let sp = spectrum(&ChainSpec::new(2, 1.0f64)?);
    let (g, f) = (ChainMetric { modes: 1 }, ChainPotential::new(sp));
    let pair = equidistant_seed(&g, &f, 0.3, &[-1.0], &[1.0])?;
    let r = compare(&g, &f, &pair, &CompareOptions::default())?;
    if r.verdict != Verdict::Curve1Faster || r.coincidences.is_empty() {
        return Ok(f64::NAN);
    }
    Ok(r.coincidences.iter().map(|c| c.gap()).fold(f64::INFINITY, f64::min))
}

fn gradient_flow(seed: u64) -> Vec<Check> {
    let suite = Suite::GradientFlow;
    vec![
        Check::from_result(suite, "metric-corollary", Relation::Below, 1e-7, metric_corollary_battery(seed, 20)),
        Check::from_result(suite, "single-mode-cubic-gap", Relation::Above, 0.0, single_mode_gap()),
    ]
}

// ------------------------------------------------------------ dually flat

fn hessian_point<H: HessianModel<f64> + ?Sized>(model: &H, r: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..model.dim()).map(|_| r.gen_range(-1.5..1.5)).collect();
    if !model.contains(&x) {
        // only the Gaussian chart is restricted: second coordinate negative
        x[1] = -r.gen_range(0.2..2.0);
    }
    x
}

/// Largest Fujiwara–Amari residual over `pairs` random `(q, x)`.
pub fn fujiwara_amari_battery<H: HessianModel<f64>>(model: &H, seed: u64, pairs: usize) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let q = hessian_point(model, &mut r);
        let x = hessian_point(model, &mut r);
        if q.iter().zip(&x).all(|(a, b)| (a - b).abs() < 0.1) {
            continue;
        }
        worst = worst.max(fujiwara_amari_residual(model, &q, &x)?);
        done += 1;
    }
    Ok(worst)
}

fn involution_gap<H: HessianModel<f64>>(model: &H, seed: u64) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    fold_max((0..30).map(|_| {
        let theta = hessian_point(model, &mut r);
        let (eta, _) = legendre_dual(model, &theta)?;
        let (back, phi) = legendre_dual(&LegendreDual(model), &eta)?;
        let dt = back.iter().zip(&theta).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
        let p = model.potential(&theta);
        Ok(dt.max((phi - p).abs() / p.abs().max(1.0)))
    }))
}

fn divergence_floor<H: HessianModel<f64>>(model: &H, seed: u64) -> geoflow_core::Result<f64> {
    let mut r = rng(seed);
    let mut lowest = f64::INFINITY;
    for _ in 0..200 {
        let p = hessian_point(model, &mut r);
        let q = hessian_point(model, &mut r);
        let d = canonical_divergence(model, &p, &q)?;
        let diag = canonical_divergence(model, &p, &p)?;
        if diag.abs() > 1e-10 {
            return Ok(-diag.abs());
        }
        lowest = lowest.min(d);
    }
    Ok(lowest)
}

fn dually_flat(seed: u64) -> Vec<Check> {
    let suite = Suite::FujiwaraAmari;
    let quad = QuadraticModel { dim: 3 };
    let exp = ExponentialModel { dim: 2 };
    let involution = involution_gap(&exp, seed)
        .and_then(|a| involution_gap(&GaussianLogPartition, seed ^ 1).map(|b| a.max(b)));
    let positivity = divergence_floor(&exp, seed ^ 2)
        .and_then(|a| divergence_floor(&GaussianLogPartition, seed ^ 3).map(|b| a.min(b)));
    vec![
        Check::from_result(
            suite,
            "fujiwara-amari-quadratic",
            Relation::Below,
            1e-6,
            fujiwara_amari_battery(&quad, seed ^ 4, 100),
        ),
        Check::from_result(
            suite,
            "fujiwara-amari-exponential",
            Relation::Below,
            1e-6,
            fujiwara_amari_battery(&exp, seed ^ 5, 100),
        ),
        Check::from_result(suite, "legendre-involution", Relation::Below, 1e-8, involution),
        Check::from_result(suite, "divergence-positivity", Relation::Above, 0.0, positivity),
    ]
}

// ---------------------------------------------------------- gaussian chain

/// Largest relative gap between the closed-form and generic cubic along
/// single-mode flows.
pub fn cubic_battery() -> geoflow_core::Result<f64> {
    let sp = spectrum(&ChainSpec::new(4, 1.0f64)?);
    let mut worst: f64 = 0.0;
    for k in 0..sp.len() {
        let one = sp.mode(k);
        let g = ChainMetric { modes: 1 };
        let f = ChainPotential::new(one.clone());
        for t_tilde in [0.3, 0.6, 2.0, 5.0] {
            let t_end = 2.0 / one.lambdas[0];
            let traj = integrate_flow(&g, &f, &one.scaled_equilibrium(t_tilde), t_end, 1e-13)?;
            for i in 1..10 {
                let t = t_end * i as f64 / 10.0;
                let closed = cubic_closed_form(&one, &traj.position(t)?, 0)?;
                let generic = -nonmetricity_cubic(&g, 0.0, &traj, t)?;
                worst = worst.max((closed - generic).abs() / closed.abs().max(generic.abs()));
            }
        }
    }
    Ok(worst)
}

/// `(worst gap away from a*, relative error of s(2a*) against −6)`.
pub fn curvature_battery() -> geoflow_core::Result<(f64, f64)> {
    let sp = spectrum(&ChainSpec::new(3, 1.0f64)?);
    let mut worst: f64 = 0.0;
    let mut at_two: f64 = 0.0;
    for k in 0..sp.len() {
        let s = sp.a_star[k];
        let ratios = (0..=19)
            .map(|i| 1.2 + 3.8 * i as f64 / 19.0)
            .chain((0..=12).map(|i| 0.2 + 0.6 * i as f64 / 12.0));
        for r in ratios {
            let closed = scalar_curvature_mode(&sp, k, r * s)?;
            let numeric = scalar_curvature_mode_numeric(&sp, k, r * s, RicciContraction::Opposite)?;
            worst = worst.max((closed - numeric).abs() / closed.abs().max(1.0));
        }
        let v = scalar_curvature_mode_numeric(&sp, k, 2.0 * s, RicciContraction::Opposite)?;
        at_two = at_two.max((v + 6.0).abs() / 6.0);
    }
    Ok((worst, at_two))
}

pub fn ode_battery() -> geoflow_core::Result<f64> {
    let sp = spectrum(&ChainSpec::new(6, 1.0f64)?);
    let g = ChainMetric { modes: sp.len() };
    let f = ChainPotential::new(sp.clone());
    let t_end = 5.0 / sp.lambdas[0];
    let mut worst: f64 = 0.0;
    for t_tilde in [0.25, 0.5, 2.0, 4.0] {
        let traj = integrate_flow(&g, &f, &sp.scaled_equilibrium(t_tilde), t_end, 1e-12)?;
        for i in 0..=50 {
            let t = t_end * i as f64 / 50.0;
            let a = traj.position(t)?;
            for k in 0..sp.len() {
                let want = analytic_variance(&sp, t_tilde, k, t);
                worst = worst.max((a[k] - want).abs() / want);
            }
        }
    }
    Ok(worst)
}

pub fn equidistance_battery() -> geoflow_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for n_beads in [2, 6, 33, 65] {
        let sp = spectrum(&ChainSpec::new(n_beads, 1.0f64)?);
        for tp in [1.1, 1.5, 2.0, 4.0, 8.0] {
            let tm = equidistant_temperatures(tp)?;
            let fp = potential_f(&sp, &sp.scaled_equilibrium(tp))?;
            let fm = potential_f(&sp, &sp.scaled_equilibrium(tm))?;
            worst = worst.max((fp - fm).abs() / fp);
        }
    }
    Ok(worst)
}

/// Outcome of one warming/cooling run in the universal sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub modes: usize,
    pub t_plus: f64,
    pub min_delta_f: f64,
    pub delta_f_mid: f64,
    pub min_gap: f64,
    pub coincidences: usize,
    pub warming_faster: bool,
}

impl SweepPoint {
    pub fn passed(&self) -> bool {
        self.warming_faster && self.min_delta_f >= -1e-9 && self.delta_f_mid > 0.0 && self.min_gap > 0.0
    }
}

/// Warming against cooling for every `(modes, T̃⁺)` pair.
pub fn universal_sweep(modes: &[usize], t_plus: &[f64], tol: f64) -> geoflow_core::Result<Vec<SweepPoint>> {
    let jobs: Vec<(usize, f64)> = modes.iter().flat_map(|&n| t_plus.iter().map(move |&t| (n, t))).collect();
    jobs.par_iter()
        .map(|&(n, tp)| {
            let spec = ChainSpec::new(n + 1, tp)?;
            let e = universal_asymmetry_experiment(&spec, tp, Horizon::default(), tol)?;
            let gaps = std::iter::once(&e.full)
                .chain(&e.modes)
                .flat_map(|r| r.coincidences.iter().map(|c| c.gap()));
            let (min_gap, count) = gaps.fold((f64::INFINITY, 0), |(m, c), g| (m.min(g), c + 1));
            Ok(SweepPoint {
                modes: n,
                t_plus: tp,
                min_delta_f: e.full.min_delta_f,
                delta_f_mid: e.delta_f_mid.unwrap_or(f64::NAN),
                min_gap: if count == 0 { f64::NAN } else { min_gap },
                coincidences: count,
                warming_faster: e.warming_faster,
            })
        })
        .collect()
}

pub const SWEEP_MODES: [usize; 5] = [1, 2, 5, 10, 32];
pub const SWEEP_T_PLUS: [f64; 5] = [1.1, 1.5, 2.0, 4.0, 8.0];

fn gaussian_chain() -> Vec<Check> {
    let suite = Suite::GaussianChain;
    let (curv, two) = match curvature_battery() {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let sweep = universal_sweep(&SWEEP_MODES, &SWEEP_T_PLUS, 1e-10)
        .map(|pts| pts.iter().filter(|p| !p.passed()).count() as f64);
    vec![
        Check::from_result(suite, "ode-vs-closed-form", Relation::Below, 1e-8, ode_battery()),
        Check::from_result(suite, "cubic-closed-vs-generic", Relation::Below, 1e-6, cubic_battery()),
        Check::from_result(suite, "curvature-closed-vs-numeric", Relation::Below, 1e-4, curv),
        Check::from_result(suite, "curvature-at-twice-equilibrium", Relation::Below, 1e-4, two),
        Check::from_result(suite, "equidistance", Relation::Below, 1e-10, equidistance_battery()),
        Check::from_result(suite, "universal-asymmetry-failures", Relation::Below, 0.5, sweep),
    ]
}
