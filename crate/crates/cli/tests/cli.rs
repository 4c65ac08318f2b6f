//! End-to-end runs of the `geoflow` binary and the bundle reader.

use std::path::Path;
use std::process::{Command, Output};

use geoflow_cli::bundle::ResultBundle;
use geoflow_cli::config::{resolve, Args};
use geoflow_cli::execute;

use clap::Parser;

fn geoflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn chain_reports_warming_faster() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["chain", "--n-beads", "11", "--t-plus", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: warming faster"));
    let b = ResultBundle::read(dir.path(), "chain").unwrap();
    assert_eq!(b.metadata.verdict.as_deref(), Some("warming faster"));
    let traj = b.table("trajectory").unwrap();
    assert_eq!(traj.header.len(), 4 + 2 * 10);
    let delta = traj.column("delta_F").unwrap();
    assert!(delta.iter().all(|c| c.as_f64().unwrap() >= -1e-9));
    assert!(!b.table("coincidences").unwrap().rows.is_empty());
}

#[test]
fn equilibrium_pair_exits_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["chain", "--n-beads", "2", "--t-plus", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let b = ResultBundle::read(dir.path(), "chain").unwrap();
    let delta = b.table("trajectory").unwrap().column("delta_F").unwrap();
    assert!(delta.iter().all(|c| c.as_f64() == Some(0.0)));
}

#[test]
fn malformed_config_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "command = \"chain\"\n# comment\n[chain]\nt_plus = [2.0\n").unwrap();
    let o = geoflow(&["--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.toml:4:"), "{}", stderr(&o));

    std::fs::write(&cfg, "[chain]\nn_beads = 0\n").unwrap();
    let o = geoflow(&["chain", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.toml:2:11: n_beads"), "{}", stderr(&o));
}

#[test]
fn compare_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["compare", "--model", "euclidean-quadratic"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("inconclusive (symmetric)"));
    let b = ResultBundle::read(dir.path(), "compare").unwrap();
    assert!(b.table("coincidences").unwrap().rows.is_empty());
    assert!(b.table("report").unwrap().column("delta_f").unwrap().iter().all(|c| c.as_f64().unwrap().abs() < 1e-12));

    let o = geoflow(&["compare", "--model", "gaussian-mode"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: curve1-faster"));

    // D(0‖θ) is bounded by 1 along −θ₁ on the exponential model
    let cfg = dir.path().join("far.toml");
    std::fs::write(&cfg, "[compare]\nmodel = \"hessian-exp\"\nlevel = 2\ndirection1 = [-1, 0]\n").unwrap();
    let o = geoflow(&["compare", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not reachable"), "{}", stderr(&o));
}

#[test]
fn verify_filters_and_fails_on_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["verify", "--suite", "fujiwara-amari"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let b = ResultBundle::read(dir.path(), "verify").unwrap();
    let suites = b.table("checks").unwrap().column("suite").unwrap();
    assert!(suites.iter().all(|c| **c == "fujiwara-amari".into()));

    let o = geoflow(&["verify", "--suite", "straightening", "--inject-fault", "nonmetricity-sign"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[FAIL] straightening/nonmetricity-closed-form"));
    assert_eq!(stdout(&o).matches("[FAIL]").count(), 1);
}

#[test]
fn verify_passes_everything_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["verify", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("[FAIL]"));
}

#[test]
fn curvature_flags_the_singular_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoflow(&["curvature"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let b = ResultBundle::read(dir.path(), "curvature").unwrap();
    let t = b.table("scalar").unwrap();
    let ratio = t.column("a_ratio").unwrap();
    let closed = t.column("s_closed_form").unwrap();
    let numeric = t.column("s_numeric").unwrap();
    let flag = t.column("flag").unwrap();
    let row = |r: f64| ratio.iter().position(|c| c.as_f64() == Some(r)).unwrap();
    let two = row(2.0);
    assert!((closed[two].as_f64().unwrap() + 6.0).abs() < 1e-10);
    assert!((numeric[two].as_f64().unwrap() + 6.0).abs() < 1e-4);
    assert!(closed[row(5.0)].as_f64().unwrap().abs() < 1e-10);
    assert!(numeric[row(5.0)].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(*flag[row(1.0)], "singular".into());
    assert_eq!(flag.iter().filter(|c| ***c == "singular".into()).count(), 1);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(["chain", "--n-beads", "6", "--t-plus", "4", "--out"])
        .arg(a.path())
        .env("GEOFLOW_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(["chain", "--n-beads", "6", "--t-plus", "4", "--out"])
        .arg(b.path())
        .env("GEOFLOW_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(many.status.code(), Some(0));
    for table in ["trajectory", "coincidences", "modes"] {
        let x = std::fs::read(ResultBundle::csv_path(a.path(), "chain", table)).unwrap();
        let y = std::fs::read(ResultBundle::csv_path(b.path(), "chain", table)).unwrap();
        assert_eq!(x, y, "{table} differs");
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(["curvature", "--out"])
        .arg(dir.path())
        .env("GEOFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bundles_round_trip_for_every_command() {
    let dir = tempfile::tempdir().unwrap();
    for argv in [
        vec!["chain", "--n-beads", "4", "--t-plus", "3"],
        vec!["compare", "--model", "hessian-exp"],
        vec!["curvature", "--n-beads", "5"],
        vec!["verify", "--suite", "gradient-flow"],
    ] {
        let mut full = vec!["geoflow"];
        full.extend(argv.iter().copied());
        full.extend(["--out", dir.path().to_str().unwrap()]);
        let cfg = resolve(&Args::try_parse_from(full).unwrap()).unwrap();
        let report = execute(&cfg).unwrap();
        let back = ResultBundle::read(dir.path(), cfg.command.name()).unwrap();
        assert_eq!(back, report.bundle, "{argv:?}");
    }
}
