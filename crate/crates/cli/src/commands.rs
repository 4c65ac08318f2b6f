//! The `chain`, `compare` and `curvature` commands. Each returns tables,
//! a verdict and an exit code; writing is left to the caller.

use geoflow_core::dually_flat::{DivergencePotential, ExponentialModel, HessianMetric};
use geoflow_core::fixtures::{Euclidean, Quadratic};
use geoflow_core::gaussian_chain::{
    scalar_curvature_mode, scalar_curvature_mode_numeric, spectrum, universal_asymmetry_experiment, ChainMetric,
    ChainPotential, ChainSpec,
};
use geoflow_core::gradient_flow::{compare, equidistant_seed, AsymmetryReport, CompareOptions, Horizon, Verdict};
use geoflow_core::manifold::{MetricField, ScalarPotential};
use geoflow_core::straightening::RicciContraction;
use geoflow_core::Error;

use crate::bundle::{Cell, Table};
use crate::config::{Model, RunConfig};
use crate::{CliError, EXIT_INCONCLUSIVE, EXIT_OK};

/// What a command produced before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub verdict: Option<String>,
    pub exit_code: i32,
    /// Lines for standard output, also kept as sidecar notes.
    pub summary: Vec<String>,
}

fn numerical(e: Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn horizon(t_end: Option<f64>) -> Horizon<f64> {
    t_end.map_or_else(Horizon::default, Horizon::Fixed)
}

fn coincidence_rows(table: &mut Table, scope: &str, r: &AsymmetryReport<f64>) {
    for c in &r.coincidences {
        table.push(vec![
            scope.into(),
            c.t.into(),
            c.speed.into(),
            c.cubic1.into(),
            c.cubic2.into(),
            c.gap().into(),
        ]);
    }
}

pub fn chain(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.chain;
    let spec = ChainSpec::new(c.n_beads, c.t_plus).map_err(|e| CliError::Config(e.to_string()))?;
    let e = universal_asymmetry_experiment(&spec, c.t_plus, horizon(c.t_end), cfg.tol).map_err(numerical)?;
    let n = e.spectrum.len();

    let mut header = vec!["t", "F_plus", "F_minus", "delta_F"].into_iter().map(String::from).collect::<Vec<_>>();
    header.extend((1..=n).map(|k| format!("a_plus_{k}")));
    header.extend((1..=n).map(|k| format!("a_minus_{k}")));
    let mut traj = Table::with_header("trajectory", header);
    for p in &e.full.grid {
        let cool = e.full.curve2.position(p.t).map_err(numerical)?;
        let warm = e.full.curve1.position(p.t).map_err(numerical)?;
        let mut row: Vec<Cell> = vec![p.t.into(), p.f2.into(), p.f1.into(), p.delta_f().into()];
        row.extend(cool.iter().map(|&v| Cell::from(v)));
        row.extend(warm.iter().map(|&v| Cell::from(v)));
        traj.push(row);
    }

    let mut coinc = Table::new(
        "coincidences",
        &["scope", "t", "speed", "cubic_warming", "cubic_cooling", "gap"],
    );
    coincidence_rows(&mut coinc, "chain", &e.full);
    for (k, r) in e.modes.iter().enumerate() {
        coincidence_rows(&mut coinc, &format!("mode_{}", k + 1), r);
    }

    let mut modes = Table::new(
        "modes",
        &["mode", "lambda", "a_star", "min_delta_F", "coincidences", "verdict"],
    );
    for (k, r) in e.modes.iter().enumerate() {
        modes.push(vec![
            ((k + 1) as f64).into(),
            e.spectrum.lambdas[k].into(),
            e.spectrum.a_star[k].into(),
            r.min_delta_f.into(),
            (r.coincidences.len() as f64).into(),
            chain_verdict(r.verdict, r.symmetric).into(),
        ]);
    }

    let verdict = if e.warming_faster {
        "warming faster"
    } else if e.full.symmetric {
        "inconclusive (symmetric)"
    } else {
        "inconclusive"
    };
    let mut summary = vec![
        format!("modes: {n}"),
        format!("t_plus: {}  t_minus: {:.12}", e.t_plus, e.t_minus),
        format!("level: {:.12e}", e.level),
        format!("min delta_F: {:.3e}", e.full.min_delta_f),
    ];
    if let (Some(t), Some(d)) = (e.t_mid, e.delta_f_mid) {
        summary.push(format!("delta_F at t_mid = {t:.6}: {d:.6e}"));
    }
    summary.extend(e.full.notes.iter().cloned());
    summary.push(format!("verdict: {verdict}"));
    Ok(Outcome {
        tables: vec![traj, coinc, modes],
        verdict: Some(verdict.into()),
        exit_code: if e.warming_faster { EXIT_OK } else { EXIT_INCONCLUSIVE },
        summary,
    })
}

fn chain_verdict(v: Verdict, symmetric: bool) -> &'static str {
    match v {
        Verdict::Curve1Faster => "warming faster",
        Verdict::Curve2Faster => "cooling faster",
        Verdict::Inconclusive if symmetric => "inconclusive (symmetric)",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn compare_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.compare;
    match c.model {
        Model::EuclideanQuadratic => run_compare(cfg, &Euclidean { dim: 2 }, &Quadratic::isotropic(vec![0.0, 0.0])),
        Model::GaussianMode => {
            let sp = spectrum(&ChainSpec::new(2, 1.0).map_err(numerical)?);
            run_compare(cfg, &ChainMetric { modes: 1 }, &ChainPotential::new(sp))
        }
        Model::HessianExp => {
            let model = ExponentialModel { dim: 2 };
            let f = DivergencePotential::new(model, vec![0.0, 0.0]).map_err(numerical)?;
            run_compare(cfg, &HessianMetric(model), &f)
        }
    }
}

fn run_compare<M, P>(cfg: &RunConfig, g: &M, f: &P) -> Result<Outcome, CliError>
where
    M: MetricField<f64>,
    P: ScalarPotential<f64>,
{
    let c = &cfg.compare;
    let pair = equidistant_seed(g, f, c.level, &c.direction1, &c.direction2).map_err(numerical)?;
    let opts = CompareOptions {
        factor: c.factor,
        horizon: horizon(c.t_end),
        tol: cfg.tol,
        ..CompareOptions::default()
    };
    let r = compare(g, f, &pair, &opts).map_err(numerical)?;

    let mut report = Table::new("report", &["t", "f1", "f2", "delta_f", "speed1", "speed2"]);
    for p in &r.grid {
        report.push(vec![
            p.t.into(),
            p.f1.into(),
            p.f2.into(),
            p.delta_f().into(),
            p.speed1.into(),
            p.speed2.into(),
        ]);
    }
    let mut coinc = Table::new("coincidences", &["t", "speed", "cubic1", "cubic2", "gap"]);
    for x in &r.coincidences {
        coinc.push(vec![x.t.into(), x.speed.into(), x.cubic1.into(), x.cubic2.into(), x.gap().into()]);
    }
    let mut seeds = Table::new("seeds", &["curve", "coordinate", "value"]);
    for (name, x) in [("curve1", &pair.x1), ("curve2", &pair.x2)] {
        for (i, v) in x.iter().enumerate() {
            seeds.push(vec![name.into(), (i as f64).into(), (*v).into()]);
        }
    }

    let verdict = if r.symmetric {
        "inconclusive (symmetric)".to_string()
    } else {
        r.verdict.as_str().to_string()
    };
    let mut summary = vec![
        format!("model: {:?}", c.model),
        format!("level: {:.12e}", pair.level),
        format!("max |delta_f|: {:.3e}", r.max_abs_delta_f),
        format!("coincidences: {}", r.coincidences.len()),
    ];
    summary.extend(r.notes.iter().cloned());
    summary.push(format!("verdict: {verdict}"));
    Ok(Outcome {
        tables: vec![report, coinc, seeds],
        verdict: Some(verdict),
        exit_code: if r.verdict == Verdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK },
        summary,
    })
}

pub fn curvature(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.curvature;
    let sp = spectrum(&ChainSpec::new(c.n_beads, 1.0).map_err(|e| CliError::Config(e.to_string()))?);
    let k = c.mode - 1;
    let a_star = sp.a_star[k];
    let mut table = Table::new("scalar", &["a_ratio", "s_closed_form", "s_numeric", "rel_error", "flag"]);
    let mut worst: f64 = 0.0;
    let mut singular = 0;
    for &ratio in &c.ratios {
        let a = ratio * a_star;
        match scalar_curvature_mode(&sp, k, a) {
            Err(Error::Singularity(_)) => {
                singular += 1;
                table.push(vec![ratio.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), "singular".into()]);
            }
            Err(e) => return Err(numerical(e)),
            Ok(closed) => {
                let numeric = scalar_curvature_mode_numeric(&sp, k, a, RicciContraction::Opposite).map_err(numerical)?;
                // unit floor keeps the error meaningful where s crosses zero
                let rel = (closed - numeric).abs() / closed.abs().max(1.0);
                worst = worst.max(rel);
                table.push(vec![ratio.into(), closed.into(), numeric.into(), rel.into(), "ok".into()]);
            }
        }
    }
    Ok(Outcome {
        tables: vec![table],
        verdict: None,
        exit_code: EXIT_OK,
        summary: vec![
            format!("mode {} of {}: lambda = {:.12e}, a* = {:.12e}", c.mode, sp.len(), sp.lambdas[k], a_star),
            format!("rows: {}  singular: {singular}", c.ratios.len()),
            format!("max rel_error: {worst:.3e}"),
        ],
    })
}
