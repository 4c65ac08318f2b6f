//! Library side of the `geoflow` command-line tool: configuration, commands,
//! verification batteries and the result-bundle format.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod verify;

use std::time::Instant;

use bundle::{Metadata, ResultBundle};
use config::{Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

/// A finished run: the bundle as written and the process exit code.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub bundle: ResultBundle,
    pub summary: Vec<String>,
    pub exit_code: i32,
}

/// Runs the configured command and writes its bundle under `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let outcome = match cfg.command {
        Command::Chain => commands::chain(cfg)?,
        Command::Compare => commands::compare_cmd(cfg)?,
        Command::Curvature => commands::curvature(cfg)?,
        Command::Verify => {
            let checks = verify::run(&cfg.verify.suites, cfg.seed, cfg.verify.inject_fault);
            let failed = checks.iter().filter(|c| !c.passed()).count();
            let mut summary: Vec<String> = checks.iter().map(|c| c.line()).collect();
            summary.push(format!("{} checks, {failed} failed", checks.len()));
            commands::Outcome {
                tables: vec![verify::table(&checks)],
                verdict: Some(if failed == 0 { "all pass" } else { "failures" }.into()),
                exit_code: if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL },
                summary,
            }
        }
    };
    let metadata = Metadata {
        tool: "geoflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command.name().into(),
        config: serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?,
        wall_time_s: start.elapsed().as_secs_f64(),
        verdict: outcome.verdict,
        exit_code: outcome.exit_code,
        tables: outcome.tables.iter().map(|t| t.name.clone()).collect(),
        notes: outcome.summary.clone(),
    };
    let bundle = ResultBundle {
        metadata,
        tables: outcome.tables,
    };
    bundle.write(&cfg.out)?;
    Ok(RunReport {
        bundle,
        summary: outcome.summary,
        exit_code: outcome.exit_code,
    })
}

/// Caps the global rayon pool from `GEOFLOW_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GEOFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("GEOFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}
