use geoflow_core::gaussian_chain::{
    analytic_variance, cubic_closed_form, equidistant_temperatures, fisher_block, kl_mode, ode_rhs, potential_f,
    scalar_curvature_mode, scalar_curvature_mode_numeric, spectrum, universal_asymmetry_experiment, ChainMetric,
    ChainPotential, ChainSpec, ModeSpectrum,
};
use geoflow_core::gradient_flow::{Horizon, Verdict};
use geoflow_core::manifold::{gradient, integrate_flow};
use geoflow_core::straightening::{nonmetricity_cubic, RicciContraction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn chain(n_beads: usize) -> ModeSpectrum<f64> {
    spectrum(&ChainSpec::new(n_beads, 1.0).unwrap())
}

#[test]
fn spectrum_matches_the_path_graph_closed_form() {
    for n_beads in [2, 3, 6, 11, 33, 65] {
        let sp = chain(n_beads);
        let n = n_beads - 1;
        assert_eq!(sp.len(), n);
        for k in 1..=n {
            let want = 2.0 * (1.0 - (k as f64 * std::f64::consts::PI / n_beads as f64).cos());
            assert!((sp.lambdas[k - 1] - want).abs() < 1e-12, "N+1={n_beads}, k={k}");
            assert_eq!(sp.a_star[k - 1], 2.0 / sp.lambdas[k - 1]);
        }
        assert!(sp.lambdas.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn ode_matches_closed_form_variances() {
    let sp = chain(6);
    let g = ChainMetric { modes: sp.len() };
    let f = ChainPotential::new(sp.clone());
    let t_end = 5.0 / sp.lambdas[0];
    for t_tilde in [0.25, 0.5, 2.0, 4.0] {
        let traj = integrate_flow(&g, &f, &sp.scaled_equilibrium(t_tilde), t_end, 1e-12).unwrap();
        for i in 0..=50 {
            let t = t_end * i as f64 / 50.0;
            let a = traj.position(t).unwrap();
            for k in 0..sp.len() {
                let want = analytic_variance(&sp, t_tilde, k, t);
                assert!(rel(a[k], want) < 1e-8, "T={t_tilde} k={k} t={t}: {} vs {want}", a[k]);
            }
        }
    }
}

#[test]
fn fisher_gradient_reproduces_the_mode_dynamics() {
    let sp = chain(9);
    let g = ChainMetric { modes: sp.len() };
    let f = ChainPotential::new(sp.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let a: Vec<f64> = sp.a_star.iter().map(|s| s * rng.gen_range(0.05..6.0)).collect();
        let neg: Vec<f64> = gradient(&g, &f, &a).unwrap().iter().map(|v| -v).collect();
        for (x, y) in neg.iter().zip(ode_rhs(&sp, &a)) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300), "{x} vs {y}");
        }
    }
}

#[test]
fn potential_is_twice_weighted_kl() {
    let sp = chain(5);
    let a = [0.3, 2.0, 0.9, 5.0];
    let kl: f64 = (0..4).map(|k| 2.0 * sp.lambdas[k] * kl_mode(sp.a_star[k], a[k])).sum();
    assert!(rel(potential_f(&sp, &a).unwrap(), kl) < 1e-14);
    // uniform start: (Σλ)(1/T − ln(1/T) − 1)
    let start = sp.scaled_equilibrium(2.0);
    let sum: f64 = sp.lambdas.iter().sum();
    assert!(rel(potential_f(&sp, &start).unwrap(), sum * (0.5 - 0.5f64.ln() - 1.0)) < 1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let x: Vec<f64> = sp.a_star.iter().map(|s| s * rng.gen_range(0.1..4.0)).collect();
        assert!(potential_f(&sp, &x).unwrap() > 0.0);
    }
}

#[test]
fn fisher_block_is_the_chain_metric_diagonal() {
    use geoflow_core::manifold::MetricField;
    let a = [0.5, 1.0, 2.0];
    let m = ChainMetric { modes: 3 }.metric(&a);
    for k in 0..3 {
        assert_eq!(m[(k, k)], fisher_block(a[k]).unwrap());
    }
}

#[test]
fn cubic_closed_form_matches_the_generic_pipeline() {
    let sp = chain(4);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..sp.len() {
        let one = sp.mode(k);
        let g = ChainMetric { modes: 1 };
        let f = ChainPotential::new(one.clone());
        for t_tilde in [0.3, 0.6, 2.0, 5.0] {
            let t_end = 2.0 / one.lambdas[0];
            let traj = integrate_flow(&g, &f, &one.scaled_equilibrium(t_tilde), t_end, 1e-13).unwrap();
            for _ in 0..10 {
                let t = rng.gen_range(0.01..0.99) * t_end;
                let a = traj.position(t).unwrap();
                let closed = cubic_closed_form(&one, &a, 0).unwrap();
                let generic = nonmetricity_cubic(&g, 0.0, &traj, t).unwrap();
                assert!(rel(closed, -generic) < 1e-6, "k={k} T={t_tilde} t={t}: {closed} vs {generic}");
            }
        }
    }
}

#[test]
fn cubic_is_decreasing_in_the_variance_at_fixed_speed() {
    let sp = chain(2);
    let (l, s) = (sp.lambdas[0], sp.a_star[0]);
    let speed = 0.7;
    let value = |a: f64| 2.0 * l * (s / a) * speed;
    let mut prev = f64::INFINITY;
    for i in 1..50 {
        let a = 0.1 * i as f64;
        assert!(value(a) < prev);
        prev = value(a);
    }
}

#[test]
fn curvature_closed_form_matches_the_tensor_pipeline() {
    let sp = chain(3);
    for k in 0..sp.len() {
        let s = sp.a_star[k];
        let ratios = (0..=19)
            .map(|i| 1.2 + (5.0 - 1.2) * i as f64 / 19.0)
            .chain((0..=12).map(|i| 0.2 + 0.6 * i as f64 / 12.0));
        for r in ratios {
            let a = r * s;
            let closed = scalar_curvature_mode(&sp, k, a).unwrap();
            let numeric = scalar_curvature_mode_numeric(&sp, k, a, RicciContraction::Opposite).unwrap();
            let scale = closed.abs().max(1.0);
            assert!((closed - numeric).abs() <= 1e-4 * scale, "k={k} a/a*={r}: {closed} vs {numeric}");
        }
        let at_two = scalar_curvature_mode_numeric(&sp, k, 2.0 * s, RicciContraction::Opposite).unwrap();
        assert!((at_two + 6.0).abs() < 6e-4);
        assert!(scalar_curvature_mode_numeric(&sp, k, s, RicciContraction::Opposite).is_err());
    }
}

#[test]
fn equidistant_starts_share_the_level() {
    for n_beads in [2, 3, 9, 33, 65] {
        let sp = chain(n_beads);
        for tp in [1.1, 1.5, 2.0, 4.0, 8.0] {
            let tm = equidistant_temperatures(tp).unwrap();
            assert!(tm > 0.0 && tm < 1.0);
            let fp = potential_f(&sp, &sp.scaled_equilibrium(tp)).unwrap();
            let fm = potential_f(&sp, &sp.scaled_equilibrium(tm)).unwrap();
            assert!((fp - fm).abs() < 1e-10 * fp, "N+1={n_beads} T+={tp}: {fp} vs {fm}");
        }
    }
}

#[test]
fn warming_and_cooling_stay_on_their_sides() {
    let sp = chain(6);
    let tm = equidistant_temperatures(3.0).unwrap();
    for k in 0..sp.len() {
        // stop before the relaxation factor sinks into round-off
        let t_max = 12.0 / sp.lambdas[k];
        for i in 0..200 {
            let t = t_max * i as f64 / 200.0;
            let lo = analytic_variance(&sp, tm, k, t);
            let hi = analytic_variance(&sp, 3.0, k, t);
            assert!(lo < sp.a_star[k] && sp.a_star[k] < hi);
        }
    }
}

#[test]
fn single_mode_warming_is_faster() {
    let spec = ChainSpec::new(2, 2.0f64).unwrap();
    let e = universal_asymmetry_experiment(&spec, 2.0, Horizon::default(), 1e-10).unwrap();
    assert!(e.warming_faster);
    assert!((e.t_minus - 0.56934).abs() < 1e-5);
    assert_eq!(e.full.verdict, Verdict::Curve1Faster);
    assert!(e.full.all_gaps_positive());
    assert!(e.modes.iter().all(|m| m.all_gaps_positive()));
    assert!(e.delta_f_mid.unwrap() > 0.0);
}

#[test]
fn ten_mode_warming_is_faster() {
    let spec = ChainSpec::new(11, 1.0f64).unwrap();
    for tp in [1.5, 2.0, 4.0] {
        let e = universal_asymmetry_experiment(&spec, tp, Horizon::default(), 1e-10).unwrap();
        assert!(e.warming_faster, "T+={tp}: {:?}", e.full.notes);
        assert!(e.full.min_delta_f >= -1e-9);
    }
}

#[test]
fn equilibrium_pair_is_symmetric() {
    let spec = ChainSpec::new(3, 1.0f64).unwrap();
    let e = universal_asymmetry_experiment(&spec, 1.0, Horizon::default(), 1e-10).unwrap();
    assert!(!e.warming_faster);
    assert!(e.full.symmetric);
    assert!(e.full.grid.iter().all(|p| p.delta_f() == 0.0));
    assert_eq!(e.verdict(), Verdict::Inconclusive);
}

#[test]
fn invalid_ratios_are_rejected() {
    let spec = ChainSpec::new(3, 1.0f64).unwrap();
    assert!(universal_asymmetry_experiment(&spec, 0.5, Horizon::default(), 1e-10).is_err());
    assert!(equidistant_temperatures(f64::NAN).is_err());
}
