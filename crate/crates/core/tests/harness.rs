use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use rhet_core::harness::{self, preset, save_config, EstimatorSpec, FilterChoice, Mode, RunConfig};
use rhet_core::spectra::Sampling;
use rhet_core::Exec;

fn small_compare(out: &Path) -> RunConfig {
    let mut cfg = preset("fig2").unwrap();
    cfg.mode = Mode::Compare;
    cfg.params.gamma_m = 2.0 * PI * 2e4;
    cfg.sim.n_samples = 80_000;
    cfg.sim.n_realizations = 4;
    cfg.lag.max_lag_gamma = 5.0;
    cfg.lag.min_lag_gamma = 1.0;
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn rhet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rhet"))
        .args(args)
        .env_remove("RHET_CONFIG")
        .env_remove("RHET_PRESET")
        .output()
        .unwrap()
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "omega_m = 1e6\n").unwrap();
    let out = rhet(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("omega_m"), "{msg}");

    std::fs::write(&path, "no_such_key = 1\n").unwrap();
    assert_eq!(rhet(&["simulate", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(rhet(&["analytic", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(rhet(&["analytic"]).status.code(), Some(2));
}

#[test]
fn analytic_preset_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = rhet(&["analytic", "--preset", "fig1bc", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.resolved", "report.txt", "homodyne_theta_scan.csv", "heterodyne.csv"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("squeezing.below_floor = true"));
}

#[test]
fn failed_gate_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_compare(&dir.path().join("run"));
    cfg.sim.n_realizations = 2;
    let path = dir.path().join("c.conf");
    save_config(&path, &cfg).unwrap();
    let out = rhet(&["compare", "--config", path.to_str().unwrap(), "--gate"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csvs = |sub: &str, threads: Option<usize>| {
        let mut cfg = small_compare(&dir.path().join(sub));
        cfg.mode = Mode::Simulate;
        cfg.threads = threads;
        harness::run(&cfg).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(dir.path().join(sub))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        assert!(!files.is_empty());
        files.iter().map(|p| std::fs::read(p).unwrap()).collect::<Vec<_>>()
    };
    let a = csvs("a", Some(1));
    assert_eq!(a, csvs("b", Some(1)));
    assert_eq!(a, csvs("c", Some(3)));
}

#[test]
fn sequential_and_parallel_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_compare(dir.path());
    cfg.mode = Mode::Simulate;
    let seq = harness::run_with(&cfg, Exec::Sequential).unwrap();
    let par = harness::run_with(&cfg, Exec::Parallel).unwrap();
    for ((_, x), (_, y)) in seq.estimates.iter().zip(&par.estimates) {
        for (u, v) in x.mean.iter().zip(&y.mean) {
            assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
        }
    }
}

#[test]
fn uncoupled_vacuum_matches_floor() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_compare(dir.path());
    cfg.params.modes[0].g = 0.0;
    cfg.params.modes[1].g = 0.0;
    cfg.params.n_p = 0.0;
    cfg.sim.n_realizations = 16;
    cfg.lag.min_lag_gamma = 0.0;
    cfg.estimators = vec![
        EstimatorSpec::standard(),
        EstimatorSpec::filtered(FilterChoice::Gate, Sampling::TBar),
        EstimatorSpec::filtered(FilterChoice::Toggle, Sampling::TBar),
    ];
    let rep = harness::run(&cfg).unwrap();
    for (spec, s) in &rep.residuals {
        assert!(s.frac_above_3_all < 0.05, "{}: {:?}", spec.label(), s);
        assert!(s.mean_z.abs() < 0.5, "{}: {:?}", spec.label(), s);
    }
    for (spec, est) in &rep.estimates {
        let pooled = est.mean.iter().sum::<f64>() / est.mean.len() as f64;
        let floor = match spec.filter {
            FilterChoice::Toggle => 0.0,
            FilterChoice::Gate => 1.0 / 3.0,
            _ => 1.0,
        };
        assert!((pooled - floor).abs() < 0.02, "{}: pooled {pooled}", spec.label());
    }
}
