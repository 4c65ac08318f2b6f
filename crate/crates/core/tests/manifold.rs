use geoflow_core::fixtures::{Euclidean, Quadratic, Sphere, SphereHeight};
use geoflow_core::gaussian_chain::{analytic_variance, spectrum, ChainMetric, ChainPotential, ChainSpec};
use geoflow_core::linalg::Matrix;
use geoflow_core::manifold::{
    christoffel_levi_civita, covariant_acceleration, gradient, integrate_flow, integrate_geodesic, metric_inverse,
    Chart, FiniteDifference, FlatConnection, LeviCivita, MetricField, NumericMetric, ScalarPotential,
    Stencil, Termination,
};
use geoflow_core::straightening::StraighteningConnection;
use geoflow_core::Error;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// `g = diag(2, 1/2)` everywhere.
struct ConstDiag;

impl Chart<f64> for ConstDiag {
    fn dim(&self) -> usize {
        2
    }
}

impl MetricField<f64> for ConstDiag {
    fn metric(&self, _x: &[f64]) -> Matrix<f64> {
        Matrix::from_diagonal(&[2.0, 0.5])
    }
}

/// A non-diagonal position-dependent metric on the plane.
struct Warped;

impl Chart<f64> for Warped {
    fn dim(&self) -> usize {
        2
    }
}

impl MetricField<f64> for Warped {
    fn metric(&self, x: &[f64]) -> Matrix<f64> {
        let (u, v) = (x[0], x[1]);
        let a = 1.0 + 0.3 * u.sin().powi(2) + 0.1 * v * v;
        let b = 0.2 * (u + v).cos();
        let c = 2.0 + 0.5 * (u * v).cos();
        Matrix::from_rows(&[vec![a, b], vec![b, c]])
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn inverse_examples() {
    let id = metric_inverse(&Euclidean { dim: 3 }, &[0.3, -1.0, 2.0]).unwrap();
    assert_eq!(id, Matrix::identity(3));
    let inv = metric_inverse(&ChainMetric { modes: 1 }, &[2.0]).unwrap();
    assert!(close(inv[(0, 0)], 8.0, 1e-15));
    let inv = metric_inverse(&ConstDiag, &[0.0, 0.0]).unwrap();
    assert_eq!(inv, Matrix::from_diagonal(&[0.5, 2.0]));
}

#[test]
fn inverse_times_metric_is_identity() {
    let x = [0.4, -0.9];
    let g = Warped.metric(&x);
    let p = metric_inverse(&Warped, &x).unwrap().mul(&g);
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((p[(i, j)] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn degenerate_metric_is_singular() {
    struct Flat;
    impl Chart<f64> for Flat {
        fn dim(&self) -> usize {
            2
        }
    }
    impl MetricField<f64> for Flat {
        fn metric(&self, _x: &[f64]) -> Matrix<f64> {
            Matrix::from_diagonal(&[1.0, 1e-14])
        }
    }
    assert!(matches!(metric_inverse(&Flat, &[0.0, 0.0]), Err(Error::SingularMatrix { .. })));
}

#[test]
fn out_of_domain_point_is_rejected() {
    assert!(matches!(
        metric_inverse(&ChainMetric { modes: 1 }, &[-1.0]),
        Err(Error::OutOfDomain { .. })
    ));
}

#[test]
fn gradient_examples() {
    let f = Quadratic::isotropic(vec![0.0, 0.0]);
    assert_eq!(gradient(&Euclidean { dim: 2 }, &f, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    let sp = spectrum(&ChainSpec::new(5, 1.0).unwrap());
    let g = ChainMetric { modes: 4 };
    let pot = ChainPotential::new(sp.clone());
    let a = [0.7, 3.1, 0.2, 1.9];
    let gr = gradient(&g, &pot, &a).unwrap();
    for k in 0..4 {
        assert!(close(gr[k], 2.0 * sp.lambdas[k] * (a[k] - sp.a_star[k]), 1e-12));
    }
    let at_min = gradient(&g, &pot, &sp.a_star).unwrap();
    assert!(at_min.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn levi_civita_examples() {
    let e = christoffel_levi_civita(&Euclidean { dim: 3 }, &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(e.max_abs(), 0.0);

    // 1-D Fisher variance block: Γ = −1/a, analytic partials vs forced finite differences
    for a in [0.3, 1.0, 2.0, 7.5] {
        let analytic = christoffel_levi_civita(&ChainMetric { modes: 1 }, &[a]).unwrap();
        let numeric = NumericMetric {
            inner: ChainMetric { modes: 1 },
            fd: FiniteDifference::default(),
        };
        let fd = christoffel_levi_civita(&numeric, &[a]).unwrap();
        assert!(close(analytic.get(0, 0, 0), -1.0 / a, 1e-14));
        assert!(close(fd.get(0, 0, 0), -1.0 / a, 1e-9));
    }

    let s = christoffel_levi_civita(&Sphere { radius: 1.0 }, &[FRAC_PI_4, 0.3]).unwrap();
    assert!(close(s.get(0, 1, 1), -0.5, 1e-14));
    let numeric = NumericMetric {
        inner: Sphere { radius: 1.0 },
        fd: FiniteDifference::default(),
    };
    let sf = christoffel_levi_civita(&numeric, &[FRAC_PI_4, 0.3]).unwrap();
    assert!(close(sf.get(0, 1, 1), -0.5, 1e-9));
    assert!(sf.is_symmetric(1e-12));
}

#[test]
fn halving_the_step_shrinks_the_discrepancy() {
    // second-order stencil: error ratio about 4 per halving
    let x = [1.1, 0.4];
    let exact = christoffel_levi_civita(&Sphere { radius: 1.3 }, &x).unwrap();
    let err = |h: f64| {
        let g = NumericMetric {
            inner: Sphere { radius: 1.3 },
            fd: FiniteDifference::with_step(Stencil::Second, h),
        };
        christoffel_levi_civita(&g, &x).unwrap().sub(&exact).max_abs()
    };
    for h in [1e-2, 5e-3] {
        let ratio = err(h) / err(h / 2.0);
        assert!(ratio >= 3.5, "ratio {ratio} at h = {h}");
    }
}

#[test]
fn covariant_acceleration_examples() {
    let flat = FlatConnection { dim: 2 };
    let line = integrate_geodesic(&flat, &[0.0f64, 0.0], &[1.0, 2.0], 1.0, 1e-10).unwrap();
    let acc = covariant_acceleration(&flat, &line, 0.5).unwrap();
    assert!(acc.iter().all(|a| a.abs() < 1e-8));

    let g = Euclidean { dim: 2 };
    let f = Quadratic::isotropic(vec![0.0f64, 0.0]);
    let traj = integrate_flow(&g, &f, &[1.0, 0.0], 2.0, 1e-11).unwrap();
    let acc = covariant_acceleration(&LeviCivita(g), &traj, 0.0).unwrap();
    assert!((acc[0] - 1.0).abs() < 1e-6 && acc[1].abs() < 1e-9, "{acc:?}");

    assert!(matches!(
        covariant_acceleration(&flat, &line, 1.5),
        Err(Error::OutOfSpan { .. })
    ));
}

#[test]
fn straight_line_geodesic() {
    let traj = integrate_geodesic(&FlatConnection { dim: 2 }, &[0.0f64, 0.0], &[1.0, 2.0], 1.0, 1e-10).unwrap();
    let end = traj.final_position();
    assert!((end[0] - 1.0).abs() < 1e-12 && (end[1] - 2.0).abs() < 1e-12);
    assert_eq!(traj.termination(), Termination::Completed);
}

#[test]
fn great_circle_reaches_the_antipode() {
    // equator start, heading north-east with unit speed
    let g = Sphere { radius: 1.0 };
    let (c, s) = (0.6f64, 0.8f64);
    let v0 = [-c, s];
    let traj = integrate_geodesic(&LeviCivita(g), &[FRAC_PI_2, 0.0], &v0, PI, 1e-12).unwrap();
    let end = traj.final_position();
    let embed = |x: &[f64]| [x[0].sin() * x[1].cos(), x[0].sin() * x[1].sin(), x[0].cos()];
    let p = embed(&end);
    let want = [-1.0, 0.0, 0.0];
    let err = (0..3).map(|i| (p[i] - want[i]).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-6, "{err}");
    let res = covariant_acceleration(&LeviCivita(g), &traj, 1.0).unwrap();
    assert!(res.iter().all(|r| r.abs() < 10.0 * 1e-6), "{res:?}");
}

#[test]
fn straightening_geodesic_traces_the_gradient_curve() {
    let sp = spectrum(&ChainSpec::new(2, 2.0).unwrap());
    let g = ChainMetric { modes: 1 };
    let f = ChainPotential::new(sp.clone());
    let conn = StraighteningConnection::new(g, f.clone());
    let a0 = 2.0 * sp.a_star[0];
    let v0: Vec<f64> = gradient(&g, &f, &[a0]).unwrap().iter().map(|v| -v).collect();
    let geo = integrate_geodesic(&conn, &[a0], &v0, 0.2, 1e-11).unwrap();
    let flow = integrate_flow(&g, &f, &[a0], 3.0, 1e-11).unwrap();
    // images are intervals; compare by matching each geodesic point to the flow
    let end = geo.final_position()[0];
    let (lo, hi) = (sp.a_star[0], a0);
    assert!(end > lo && end < hi);
    for t in [0.05, 0.1, 0.15, 0.2] {
        let x = geo.position(t).unwrap()[0];
        // the flow passes through x at the closed-form time
        let s = -(((x / sp.a_star[0]) - 1.0) / (a0 / sp.a_star[0] - 1.0)).ln() / (2.0 * sp.lambdas[0]);
        let y = flow.position(s).unwrap()[0];
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn euclidean_flow_is_exponential() {
    let g = Euclidean { dim: 2 };
    let f = Quadratic::isotropic(vec![0.0, 0.0]);
    let tol = 1e-9;
    let traj = integrate_flow(&g, &f, &[1.0, 0.0], 3.0, tol).unwrap();
    let end = traj.final_position();
    assert!((end[0] - (-3.0f64).exp()).abs() < tol && end[1] == 0.0);
}

#[test]
fn single_mode_flow_matches_closed_form() {
    let sp = spectrum(&ChainSpec::new(2, 2.0).unwrap());
    let g = ChainMetric { modes: 1 };
    let f = ChainPotential::new(sp.clone());
    let traj = integrate_flow(&g, &f, &[2.0 * 2.0 / sp.lambdas[0]], 4.0, 1e-12).unwrap();
    for &t in traj.times() {
        let want = analytic_variance(&sp, 2.0, 0, t);
        let got = traj.position(t).unwrap()[0];
        assert!(close(got, want, 1e-8), "t = {t}: {got} vs {want}");
    }
}

#[test]
fn flow_from_the_minimum_stays_put() {
    let g = Euclidean { dim: 2 };
    let f = Quadratic::isotropic(vec![0.5, -0.5]);
    let traj = integrate_flow(&g, &f, &[0.5, -0.5], 10.0, 1e-9).unwrap();
    assert!(traj.samples().iter().all(|s| s.x == vec![0.5, -0.5]));
}

#[test]
fn energy_identity_along_flows() {
    // ḟ = −‖ẋ‖² at dense samples
    let g = Sphere { radius: 1.0 };
    let f = SphereHeight::new(1.0);
    let traj = integrate_flow(&g, &f, &[0.7, 0.4], 3.0, 1e-11).unwrap();
    let fd = FiniteDifference::<f64>::default();
    for i in 1..40 {
        let t = 3.0 * i as f64 / 40.0;
        let fdot = fd.derivative(|s| vec![f.value(&traj.position(s).unwrap())], t)[0];
        let x = traj.position(t).unwrap();
        let v = traj.velocity(t).unwrap();
        let speed2 = g.metric(&x).bilinear(&v, &v);
        assert!(close(fdot, -speed2, 1e-6), "t = {t}: {fdot} vs {}", -speed2);
    }
}

#[test]
fn geodesic_residual_tracks_the_tolerance() {
    // the dense interpolant's defect scales like tol / h with h ~ tol^(1/5)
    let conn = LeviCivita(Warped);
    for tol in [1e-6, 1e-9, 1e-12] {
        let traj = integrate_geodesic(&conn, &[0.1, 0.2], &[0.7, -0.4], 2.0, tol).unwrap();
        for i in 1..100 {
            let t = 2.0 * i as f64 / 100.0;
            let r = covariant_acceleration(&conn, &traj, t).unwrap();
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(n <= 10.0 * tol.powf(0.8), "tol {tol}, t = {t}: {n}");
        }
        // at the integrator nodes the interpolant meets the vector field exactly
        for &t in traj.times() {
            let r = covariant_acceleration(&conn, &traj, t).unwrap();
            assert!(r.iter().all(|v| v.abs() <= 10.0 * tol), "node {t}: {r:?}");
        }
    }
}

#[test]
fn geodesic_through_the_pole_is_flagged() {
    // meridian from the equator heading north reaches θ = 0 at t = π/2
    let g = Sphere { radius: 1.0 };
    let traj = integrate_geodesic(&LeviCivita(g), &[FRAC_PI_2, 0.3], &[-1.0, 0.0], 3.0, 1e-10).unwrap();
    assert_eq!(traj.termination(), Termination::DomainExit);
    let end = traj.final_position();
    assert!(g.contains(&end));
    assert!(end[0] < 1e-3, "{end:?}");
    assert!(traj.span().1 < FRAC_PI_2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_duality(u in -2.0f64..2.0, v in -2.0f64..2.0, w0 in -1.0f64..1.0, w1 in -1.0f64..1.0) {
        let f = Quadratic::weighted(vec![0.3, -0.2], vec![1.5, 0.7]);
        let x = [u, v];
        let gr = gradient(&Warped, &f, &x).unwrap();
        let lhs = Warped.metric(&x).bilinear(&gr, &[w0, w1]);
        let df = f.differential(&x);
        let rhs = df[0] * w0 + df[1] * w1;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-8 * df.iter().map(|d| d.abs()).sum::<f64>()).max(1e-12));
    }

    #[test]
    fn levi_civita_is_metric_compatible(
        u in -1.5f64..1.5, v in -1.5f64..1.5,
        d0 in -1.0f64..1.0, d1 in -1.0f64..1.0,
        p in prop::array::uniform4(-1.0f64..1.0),
        q in prop::array::uniform4(-1.0f64..1.0),
    ) {
        // fields V(x) = A x + b, W(x) = C x + e along the line x + s d
        let field = |m: &[f64; 4], x: &[f64]| vec![m[0] * x[0] + m[1], m[2] * x[1] + m[3]];
        let jac = |m: &[f64; 4], d: &[f64]| vec![m[0] * d[0], m[2] * d[1]];
        let x = [u, v];
        let d = [d0, d1];
        let fd = FiniteDifference::<f64>::default();
        let lhs = fd.derivative(
            |s| {
                let y = [u + s * d0, v + s * d1];
                vec![Warped.metric(&y).bilinear(&field(&p, &y), &field(&q, &y))]
            },
            0.0,
        )[0];
        let gamma = christoffel_levi_civita(&Warped, &x).unwrap();
        let (vf, wf) = (field(&p, &x), field(&q, &x));
        let nv: Vec<f64> = jac(&p, &d).iter().zip(gamma.contract(&d, &vf)).map(|(a, b)| a + b).collect();
        let nw: Vec<f64> = jac(&q, &d).iter().zip(gamma.contract(&d, &wf)).map(|(a, b)| a + b).collect();
        let g = Warped.metric(&x);
        let rhs = g.bilinear(&nv, &wf) + g.bilinear(&vf, &nw);
        prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(rhs.abs()).max(1.0));
    }
}
