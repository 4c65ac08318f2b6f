//! Run configuration: a TOML file with optional sections, overridden by
//! command-line flags. Every rejected value is reported with its location,
//! either `path:line:col` in the file or the flag that supplied it.

use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Chain,
    Compare,
    Verify,
    Curvature,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Chain => "chain",
            Command::Compare => "compare",
            Command::Verify => "verify",
            Command::Curvature => "curvature",
        }
    }
}

/// Fixtures available to `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Half the squared Euclidean distance on the plane.
    EuclideanQuadratic,
    /// One Gaussian-chain mode in its variance coordinate.
    GaussianMode,
    /// Divergence from the origin on the exponential Hessian model.
    HessianExp,
}

impl Model {
    pub fn dim(self) -> usize {
        match self {
            Model::GaussianMode => 1,
            Model::EuclideanQuadratic | Model::HessianExp => 2,
        }
    }

    pub fn default_level(self) -> f64 {
        match self {
            Model::EuclideanQuadratic => 0.5,
            Model::GaussianMode => 0.3,
            Model::HessianExp => 0.5,
        }
    }

    pub fn default_directions(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Model::EuclideanQuadratic => (vec![1.0, 0.0], vec![0.0, 1.0]),
            // curve 1 warms (variance below a*), curve 2 cools
            Model::GaussianMode => (vec![-1.0], vec![1.0]),
            Model::HessianExp => (vec![1.0, 0.0], vec![-1.0, 0.0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Manifold,
    Straightening,
    GradientFlow,
    #[serde(alias = "dually-flat")]
    #[value(alias = "dually-flat")]
    FujiwaraAmari,
    GaussianChain,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Manifold,
        Suite::Straightening,
        Suite::GradientFlow,
        Suite::FujiwaraAmari,
        Suite::GaussianChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Manifold => "manifold",
            Suite::Straightening => "straightening",
            Suite::GradientFlow => "gradient-flow",
            Suite::FujiwaraAmari => "fujiwara-amari",
            Suite::GaussianChain => "gaussian-chain",
        }
    }
}

/// Deliberate defects for exercising the failure path of `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flips the sign of the second term of the non-metricity closed form.
    NonmetricitySign,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "geoflow", version, about = "Relaxation asymmetry experiments on Riemannian gradient flows")]
pub struct Args {
    /// Command to run; may instead come from `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Beads in the chain (modes = beads − 1).
    #[arg(long)]
    pub n_beads: Option<usize>,
    /// Cooling temperature ratio `T̃⁺ ≥ 1`.
    #[arg(long)]
    pub t_plus: Option<f64>,
    /// Fixed integration horizon; omitted means run to convergence.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Model for `compare`.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Restrict `verify` to the named suites (repeatable).
    #[arg(long = "suite", value_enum)]
    pub suites: Vec<Suite>,
    /// Test mode: inject a known defect into `verify`.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_beads: usize,
    pub t_plus: f64,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub model: Model,
    pub level: f64,
    pub direction1: Vec<f64>,
    pub direction2: Vec<f64>,
    pub factor: f64,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureConfig {
    pub n_beads: usize,
    /// 1-based mode index.
    pub mode: usize,
    pub ratios: Vec<f64>,
}

/// Fully resolved configuration, echoed into the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: f64,
    pub chain: ChainConfig,
    pub compare: CompareConfig,
    pub verify: VerifyConfig,
    pub curvature: CurvatureConfig,
}

pub const MAX_BEADS: usize = 513;

/// `a/a*` from 0.2 to 6.0 in steps of 0.1; exact decimals so that 1 is hit.
pub fn default_ratios() -> Vec<f64> {
    (2..=60).map(|i| i as f64 / 10.0).collect()
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let model = Model::GaussianMode;
        let (direction1, direction2) = model.default_directions();
        Self {
            command,
            out: PathBuf::from("geoflow-out"),
            seed: 1,
            tol: 1e-10,
            chain: ChainConfig {
                n_beads: 11,
                t_plus: 2.0,
                t_end: None,
            },
            compare: CompareConfig {
                model,
                level: model.default_level(),
                direction1,
                direction2,
                factor: 0.0,
                t_end: None,
            },
            verify: VerifyConfig {
                suites: Suite::ALL.to_vec(),
                inject_fault: None,
            },
            curvature: CurvatureConfig {
                n_beads: 2,
                mode: 1,
                ratios: default_ratios(),
            },
        }
    }
}

/// A float that also accepts TOML integers.
#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

type S<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: S<Command>,
    out: S<String>,
    seed: S<u64>,
    tol: S<Real>,
    chain: Option<ChainFile>,
    compare: Option<CompareFile>,
    verify: Option<VerifyFile>,
    curvature: Option<CurvatureFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    n_beads: S<usize>,
    t_plus: S<Real>,
    t_end: S<Real>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareFile {
    model: S<Model>,
    level: S<Real>,
    direction1: S<Vec<Real>>,
    direction2: S<Vec<Real>>,
    factor: S<Real>,
    t_end: S<Real>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    suites: S<Vec<Suite>>,
    inject_fault: S<Fault>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurvatureFile {
    n_beads: S<usize>,
    mode: S<usize>,
    ratios: S<Vec<Real>>,
}

/// Where a value came from, for diagnostics.
enum Origin<'a> {
    File { path: &'a Path, text: &'a str, span: Range<usize> },
    Flag(&'static str),
}

impl Origin<'_> {
    fn error(&self, msg: impl std::fmt::Display) -> CliError {
        match self {
            Origin::File { path, text, span } => {
                let (line, col) = line_col(text, span.start);
                CliError::Config(format!("{}:{line}:{col}: {msg}", path.display()))
            }
            Origin::Flag(flag) => CliError::Config(format!("{flag}: {msg}")),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn check_tol(v: f64, at: &Origin) -> Result<f64, CliError> {
    if v.is_finite() && (1e-14..=1e-4).contains(&v) {
        Ok(v)
    } else {
        Err(at.error(format!("tol must lie in [1e-14, 1e-4], got {v}")))
    }
}

fn check_beads(v: usize, at: &Origin) -> Result<usize, CliError> {
    if (2..=MAX_BEADS).contains(&v) {
        Ok(v)
    } else {
        Err(at.error(format!("n_beads must lie in [2, {MAX_BEADS}], got {v}")))
    }
}

fn check_t_plus(v: f64, at: &Origin) -> Result<f64, CliError> {
    if v.is_finite() && (1.0..=1e3).contains(&v) {
        Ok(v)
    } else {
        Err(at.error(format!("t_plus must lie in [1, 1000], got {v}")))
    }
}

fn check_positive(name: &str, v: f64, at: &Origin) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(at.error(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_finite(name: &str, v: f64, at: &Origin) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(at.error(format!("{name} must be finite, got {v}")))
    }
}

fn check_direction(name: &str, v: &[f64], dim: usize, at: &Origin) -> Result<Vec<f64>, CliError> {
    if v.len() != dim {
        return Err(at.error(format!("{name} needs {dim} components for this model, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) || v.iter().all(|&c| c == 0.0) {
        return Err(at.error(format!("{name} must be finite and nonzero")));
    }
    Ok(v.to_vec())
}

fn reals(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

/// Reads the file (if any) and applies flags on top of the defaults.
pub fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let text;
    let file = match &args.config {
        Some(path) => {
            text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
            let parsed: FileConfig = toml::from_str(&text).map_err(|e| {
                let (line, col) = e.span().map_or((1, 1), |s| line_col(&text, s.start));
                CliError::Config(format!("{}:{line}:{col}: {}", path.display(), e.message().trim()))
            })?;
            Some((path.as_path(), text.as_str(), parsed))
        }
        None => None,
    };

    let command = match (args.command, file.as_ref().and_then(|f| f.2.command.as_ref())) {
        (Some(c), _) => c,
        (None, Some(c)) => *c.get_ref(),
        (None, None) => {
            return Err(CliError::Config(
                "no command given; pass one of chain, compare, verify, curvature".into(),
            ))
        }
    };
    let mut cfg = RunConfig::defaults(command);

    if let Some((path, text, f)) = &file {
        let at = |span: Range<usize>| Origin::File { path, text, span };
        if let Some(v) = &f.out {
            cfg.out = PathBuf::from(v.get_ref());
        }
        if let Some(v) = &f.seed {
            cfg.seed = *v.get_ref();
        }
        if let Some(v) = &f.tol {
            cfg.tol = check_tol(v.get_ref().0, &at(v.span()))?;
        }
        if let Some(c) = &f.chain {
            if let Some(v) = &c.n_beads {
                cfg.chain.n_beads = check_beads(*v.get_ref(), &at(v.span()))?;
            }
            if let Some(v) = &c.t_plus {
                cfg.chain.t_plus = check_t_plus(v.get_ref().0, &at(v.span()))?;
            }
            if let Some(v) = &c.t_end {
                cfg.chain.t_end = Some(check_positive("t_end", v.get_ref().0, &at(v.span()))?);
            }
        }
        if let Some(c) = &f.compare {
            if let Some(v) = &c.model {
                cfg.compare.model = *v.get_ref();
                let (d1, d2) = cfg.compare.model.default_directions();
                cfg.compare.direction1 = d1;
                cfg.compare.direction2 = d2;
                cfg.compare.level = cfg.compare.model.default_level();
            }
            let dim = cfg.compare.model.dim();
            if let Some(v) = &c.level {
                cfg.compare.level = check_positive("level", v.get_ref().0, &at(v.span()))?;
            }
            if let Some(v) = &c.direction1 {
                cfg.compare.direction1 = check_direction("direction1", &reals(v.get_ref()), dim, &at(v.span()))?;
            }
            if let Some(v) = &c.direction2 {
                cfg.compare.direction2 = check_direction("direction2", &reals(v.get_ref()), dim, &at(v.span()))?;
            }
            if let Some(v) = &c.factor {
                cfg.compare.factor = check_finite("factor", v.get_ref().0, &at(v.span()))?;
            }
            if let Some(v) = &c.t_end {
                cfg.compare.t_end = Some(check_positive("t_end", v.get_ref().0, &at(v.span()))?);
            }
        }
        if let Some(c) = &f.verify {
            if let Some(v) = &c.suites {
                if v.get_ref().is_empty() {
                    return Err(at(v.span()).error("suites must name at least one suite"));
                }
                cfg.verify.suites = v.get_ref().clone();
            }
            if let Some(v) = &c.inject_fault {
                cfg.verify.inject_fault = Some(*v.get_ref());
            }
        }
        if let Some(c) = &f.curvature {
            if let Some(v) = &c.n_beads {
                cfg.curvature.n_beads = check_beads(*v.get_ref(), &at(v.span()))?;
            }
            if let Some(v) = &c.mode {
                cfg.curvature.mode = *v.get_ref();
                if cfg.curvature.mode == 0 || cfg.curvature.mode >= cfg.curvature.n_beads {
                    return Err(at(v.span()).error(format!(
                        "mode must lie in [1, {}], got {}",
                        cfg.curvature.n_beads - 1,
                        cfg.curvature.mode
                    )));
                }
            }
            if let Some(v) = &c.ratios {
                let r = reals(v.get_ref());
                if r.is_empty() || r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(at(v.span()).error("ratios must be a nonempty list of positive numbers"));
                }
                cfg.curvature.ratios = r;
            }
        }
    }

    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = check_tol(v, &Origin::Flag("--tol"))?;
    }
    if let Some(v) = args.n_beads {
        let v = check_beads(v, &Origin::Flag("--n-beads"))?;
        cfg.chain.n_beads = v;
        cfg.curvature.n_beads = v;
    }
    if let Some(v) = args.t_plus {
        cfg.chain.t_plus = check_t_plus(v, &Origin::Flag("--t-plus"))?;
    }
    if let Some(v) = args.t_end {
        let v = check_positive("t_end", v, &Origin::Flag("--t-end"))?;
        cfg.chain.t_end = Some(v);
        cfg.compare.t_end = Some(v);
    }
    if let Some(m) = args.model {
        if m != cfg.compare.model {
            cfg.compare.model = m;
            let (d1, d2) = m.default_directions();
            cfg.compare.direction1 = d1;
            cfg.compare.direction2 = d2;
            cfg.compare.level = m.default_level();
        }
    }
    if !args.suites.is_empty() {
        cfg.verify.suites = args.suites.clone();
    }
    if args.inject_fault.is_some() {
        cfg.verify.inject_fault = args.inject_fault;
    }
    if cfg.curvature.mode >= cfg.curvature.n_beads {
        return Err(CliError::Config(format!(
            "curvature mode {} does not exist with {} beads",
            cfg.curvature.mode, cfg.curvature.n_beads
        )));
    }
    cfg.verify.suites.sort();
    cfg.verify.suites.dedup();
    Ok(cfg)
}
