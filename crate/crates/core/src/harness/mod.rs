//! End-to-end pipelines behind the `rhet` CLI: analytic sweeps, stochastic
//! ensembles, residual comparison and LO phase scans.

pub mod config;
mod plot;
mod report;

use std::path::{Path, PathBuf};

pub use config::{
    load_config, parse_config, preset, preset_names, preset_text, save_config, to_config_string, EstimatorSpec,
    FilterChoice, LagSettings, Mode, RunConfig, SimSettings, SweepSettings,
};
pub use report::{residuals, sideband_band, Residual, ResidualSummary, SqueezingSummary};

use crate::analytic::{self, FrequencyGrid, Psd, SpectrumSet};
use crate::detect::{trajectory_current, write_current, write_current_csv, CurrentTrace};
use crate::error::{Error, Result};
use crate::langevin::{write_trajectory, Integrator, SimConfig, Trajectory, MAX_DT_OMEGA};
use crate::model::{self, DerivedRates, ModeRole};
use crate::par::{self, Exec};
use crate::spectra::{
    direct_autocorr, filter_ft_coeffs, filtered_estimate, phase_scores, psd_standard_with, summarize_scan, use_direct,
    write_estimate, EnsembleAccumulator, EstimatorOptions, FilterSpec, LagCorrelator, PhaseScan, PsdEstimate, Sampling,
    ScoreCurves,
};

/// Quantities derived from a config before any work is done.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub rates: DerivedRates,
    pub sim: SimConfig,
    /// Lag cutoff in samples: `max_lag_gamma / Gamma`, capped at `N / 4`.
    pub max_lag: usize,
    pub min_lag: usize,
    pub warnings: Vec<String>,
}

pub fn plan(cfg: &RunConfig) -> Result<Plan> {
    cfg.validate()?;
    let rates = model::derived_rates(&cfg.params)?;
    let g = rates.gamma_total;
    let mut sim = SimConfig::for_params(&cfg.params, g, cfg.sim.n_samples, cfg.sim.n_realizations, cfg.sim.seed);
    sim.dt = cfg.sim.dt.unwrap_or(MAX_DT_OMEGA / cfg.params.omega_m);
    sim.burn_in = (cfg.sim.burn_in_gamma / (g * sim.dt)).ceil() as usize;
    sim.scheme = cfg.sim.scheme;
    let samples = |gammas: f64| (gammas / (g * sim.dt)).ceil() as usize;
    let max_lag = samples(cfg.lag.max_lag_gamma).min(cfg.sim.n_samples / 4);
    let min_lag = samples(cfg.lag.min_lag_gamma);
    let mut warnings = cfg.params.resolution_warnings(&rates);
    if max_lag < samples(cfg.lag.max_lag_gamma) {
        warnings.push(format!(
            "max lag capped at N/4 = {max_lag} samples ({:.1}/Gamma)",
            max_lag as f64 * sim.dt * g
        ));
    }
    Ok(Plan { rates, sim, max_lag, min_lag, warnings })
}

/// Filter for a configured estimator; `None` for the plain periodogram.
pub fn filter_spec(cfg: &RunConfig, choice: FilterChoice) -> Option<FilterSpec> {
    let (w, phase) = (cfg.params.lo_omega, cfg.lag.filter_phase);
    match choice {
        FilterChoice::Standard => None,
        FilterChoice::Constant => Some(FilterSpec::constant()),
        FilterChoice::Toggle => Some(FilterSpec::toggle(w, phase)),
        FilterChoice::Gate => Some(FilterSpec::gate(w, phase, cfg.lag.gate_halfwidth)),
    }
}

pub fn estimator_options(cfg: &RunConfig, plan: &Plan, exec: Exec) -> EstimatorOptions {
    let mut o = EstimatorOptions::new(plan.max_lag).window(cfg.lag.window).exec(exec);
    o.min_lag = plan.min_lag;
    o.harmonics = cfg.lag.harmonics;
    o
}

/// Everything a run produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub rates: Option<DerivedRates>,
    pub warnings: Vec<String>,
    pub estimates: Vec<(EstimatorSpec, PsdEstimate)>,
    pub residuals: Vec<(EstimatorSpec, ResidualSummary)>,
    pub squeezing: Option<SqueezingSummary>,
    pub phase_scan: Option<PhaseScan>,
}

impl Report {
    /// Whether every filtered estimator stays within the `|z| > 3` budget.
    pub fn gate_passed(&self, max_fraction: f64) -> bool {
        self.residuals.iter().filter(|(e, _)| e.filter != FilterChoice::Standard).all(|(_, r)| r.frac_above_3 < max_fraction)
    }
}

/// Runs the configured pipeline on a pool of `cfg.threads` workers.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    par::with_threads(cfg.threads, || run_with(cfg, Exec::default()))
}

pub fn run_with(cfg: &RunConfig, exec: Exec) -> Result<Report> {
    let plan = plan(cfg)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut rep = Report { rates: Some(plan.rates), warnings: plan.warnings.clone(), ..Default::default() };
    match cfg.mode {
        config::Mode::Analytic => run_analytic(cfg, &plan, exec, &mut rep)?,
        config::Mode::Simulate => {
            rep.estimates = simulate_estimates(cfg, &plan, exec, &mut rep.files)?;
            write_estimates(cfg, &mut rep)?;
        }
        config::Mode::Compare => {
            rep.estimates = simulate_estimates(cfg, &plan, exec, &mut rep.files)?;
            write_estimates(cfg, &mut rep)?;
            run_compare(cfg, &plan, exec, &mut rep)?;
        }
        config::Mode::PhaseScan => run_phase_scan(cfg, &plan, exec, &mut rep)?,
    }
    rep.files.push(write_resolved_config(&cfg.out_dir, cfg)?);
    let summary = cfg.out_dir.join("report.txt");
    report::write_summary(&summary, cfg, &plan, &rep)?;
    rep.files.push(summary);
    Ok(rep)
}

/// Streams realizations through `f` in ordered batches and folds the results
/// in realization order, so output does not depend on the worker count.
pub fn for_each_realization<T, F, G>(cfg: &RunConfig, plan: &Plan, exec: Exec, f: F, mut fold: G) -> Result<()>
where
    T: Send,
    F: Fn(&Trajectory, CurrentTrace) -> Result<T> + Sync + Send,
    G: FnMut(T) -> Result<()>,
{
    let integ = Integrator::new(&cfg.params, &plan.sim)?;
    plan.sim.validate(&cfg.params, plan.rates.gamma_total)?;
    let total = plan.sim.n_realizations;
    let batch = if exec.is_parallel() { par::current_threads().max(1) } else { 1 };
    let seed = plan.sim.seed;
    let mut start = 0;
    while start < total {
        let n = batch.min(total - start);
        let results = par::try_map_range(exec, n, |i| {
            let r = (start + i) as u64;
            let traj = integ.run(r);
            let current = trajectory_current(&traj, ModeRole::Probe, cfg.params.lo_omega, cfg.params.lo_theta);
            current
                .and_then(|c| f(&traj, c))
                .map_err(|e| Error::Realization { realization: r, seed, source: Box::new(e) })
        })?;
        for t in results {
            fold(t)?;
        }
        start += n;
    }
    Ok(())
}

/// Per-realization estimates for every configured estimator, sharing one
/// harmonic correlator between the filtered ones.
pub fn trace_estimates(cfg: &RunConfig, plan: &Plan, trace: &CurrentTrace, exec: Exec) -> Result<Vec<PsdEstimate>> {
    let opts = estimator_options(cfg, plan, exec);
    let filters: Vec<Option<FilterSpec>> = cfg.estimators.iter().map(|e| filter_spec(cfg, e.filter)).collect();
    let need_corr = filters.iter().flatten().any(|f| !use_direct(trace.len(), f, &opts));
    if filters.iter().any(Option::is_some) {
        crate::spectra::check_lags(trace.len(), &opts)?;
    }
    let corr = need_corr.then(|| LagCorrelator::new(trace, cfg.params.lo_omega, opts.max_lag, opts.harmonics, exec));
    cfg.estimators
        .iter()
        .zip(&filters)
        .map(|(e, f)| match f {
            None => psd_standard_with(trace, cfg.lag.n_segments, exec),
            Some(spec) => {
                let r = match (&corr, use_direct(trace.len(), spec, &opts)) {
                    (Some(c), false) => c.autocorr(spec, e.sampling),
                    _ => direct_autocorr(trace, spec, e.sampling, opts.max_lag, exec),
                };
                Ok(filtered_estimate(trace, spec, e.sampling, &r, opts.window))
            }
        })
        .collect()
}

/// Ensemble mean and standard error for every configured estimator.
pub fn simulate_estimates(cfg: &RunConfig, plan: &Plan, exec: Exec, files: &mut Vec<PathBuf>) -> Result<Vec<(EstimatorSpec, PsdEstimate)>> {
    let inner = if exec.is_parallel() && par::current_threads() > 1 { Exec::Sequential } else { exec };
    let dump_dir = cfg.out_dir.join("trajectories");
    if cfg.sim.dump_trajectories {
        std::fs::create_dir_all(&dump_dir)?;
    }
    let mut accs = vec![EnsembleAccumulator::new(); cfg.estimators.len()];
    let mut dumped = Vec::new();
    for_each_realization(
        cfg,
        plan,
        exec,
        |traj, trace| {
            let mut written = Vec::new();
            if cfg.sim.dump_trajectories {
                let p = dump_dir.join(format!("trajectory_{:05}.bin", traj.realization));
                write_trajectory(&p, traj)?;
                written.push(p);
            }
            if cfg.sim.export_current && traj.realization == 0 {
                let (csv, bin) = (cfg.out_dir.join("current_00000.csv"), cfg.out_dir.join("current_00000.bin"));
                write_current_csv(&csv, &trace)?;
                write_current(&bin, &trace)?;
                written.extend([csv, bin]);
            }
            Ok((trace_estimates(cfg, plan, &trace, inner)?, written))
        },
        |(ests, written)| {
            dumped.extend(written);
            for (acc, e) in accs.iter_mut().zip(ests) {
                acc.push(e)?;
            }
            Ok(())
        },
    )?;
    files.extend(dumped);
    cfg.estimators.iter().zip(accs).map(|(e, a)| Ok((*e, a.finish()?))).collect()
}

fn write_estimates(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    for (spec, est) in &rep.estimates {
        let path = cfg.out_dir.join(format!("psd_{}.csv", spec.file_stem()));
        let extra = vec![
            ("label".to_string(), spec.label()),
            ("seed".to_string(), cfg.sim.seed.to_string()),
            ("n_samples".to_string(), cfg.sim.n_samples.to_string()),
        ];
        write_estimate(&path, est, &extra)?;
        rep.files.push(path.with_extension("meta"));
        rep.files.push(path);
    }
    Ok(())
}

/// Analytic grid shared by the sweep and comparison pipelines: step
/// `step_gamma * Gamma`, coarsened if that would exceed `MAX_GRID_POINTS`.
pub fn analytic_grid(cfg: &RunConfig, rates: &DerivedRates) -> FrequencyGrid {
    const MAX_GRID_POINTS: f64 = 400_000.0;
    let omega_max = cfg.sweep.max_omega_m * cfg.params.omega_m;
    let step = (cfg.sweep.step_gamma * rates.gamma_total).max(2.0 * omega_max / MAX_GRID_POINTS);
    FrequencyGrid::symmetric(omega_max, step)
}

/// The symmetrized analytic spectrum the given estimator converges to.
/// A filter phase `phi0` acts as an LO phase shift of `-phi0 / 2`.
pub fn predicted_psd(cfg: &RunConfig, sym: &SpectrumSet, spec: &EstimatorSpec) -> Result<Psd> {
    let (w, theta) = (cfg.params.lo_omega, cfg.params.lo_theta);
    let Some(filter) = filter_spec(cfg, spec.filter) else {
        return if w == 0.0 { analytic::homodyne_psd(sym, theta) } else { analytic::heterodyne_psd(sym, w) };
    };
    let c = filter_ft_coeffs(&filter)?;
    let theta_eff = theta - 0.5 * filter.phase0;
    match spec.sampling {
        Sampling::T0 => analytic::rheterodyne_t0_psd(sym, w, theta_eff, c.f0, c.f2),
        _ => analytic::rheterodyne_psd(sym, w, theta_eff, c.f0, c.f2),
    }
}

fn run_compare(cfg: &RunConfig, plan: &Plan, exec: Exec, rep: &mut Report) -> Result<()> {
    let grid = analytic_grid(cfg, &plan.rates);
    let sym = analytic::base_spectra_with(&cfg.params, &grid, exec)?.symmetrized()?;
    let band = sideband_band(cfg.params.omega_m, cfg.params.lo_omega, plan.rates.gamma_total, 10.0);
    for (spec, est) in &rep.estimates {
        let pred = predicted_psd(cfg, &sym, spec)?;
        let (rows, summary) = residuals(est, &pred, &band);
        let stem = spec.file_stem();
        let path = cfg.out_dir.join(format!("residuals_{stem}.csv"));
        report::write_residuals(&path, &rows)?;
        rep.files.push(path);
        if cfg.plot {
            let svg = cfg.out_dir.join(format!("overlay_{stem}.svg"));
            let (lo, hi) = (band.first().map_or(0.0, |b| b.0), band.last().map_or(0.0, |b| b.1));
            plot::overlay_svg(&svg, &spec.label(), &rows, lo, hi)?;
            rep.files.push(svg);
        }
        rep.residuals.push((*spec, summary));
    }
    Ok(())
}

fn run_analytic(cfg: &RunConfig, plan: &Plan, exec: Exec, rep: &mut Report) -> Result<()> {
    let grid = analytic_grid(cfg, &plan.rates);
    let s = analytic::base_spectra_with(&cfg.params, &grid, exec)?;
    let sym = s.symmetrized()?;
    let out = &cfg.out_dir;
    let thetas = &cfg.sweep.thetas;
    let omegas = &cfg.sweep.lo_omegas;

    let mut hom = Vec::new();
    let mut hom_sym = Vec::new();
    for &t in thetas {
        hom.push(analytic::homodyne_psd(&s, t)?);
        hom_sym.push(analytic::symmetrize(&analytic::homodyne_psd(&sym, t)?)?);
    }
    let het = omegas.iter().map(|&w| analytic::heterodyne_psd(&s, w)).collect::<Result<Vec<_>>>()?;
    let het0 = vec![analytic::het0_psd(&s)?];

    let mut filters: Vec<FilterChoice> = Vec::new();
    for e in &cfg.estimators {
        if e.filter != FilterChoice::Standard && !filters.contains(&e.filter) {
            filters.push(e.filter);
        }
    }
    if filters.is_empty() {
        filters.push(FilterChoice::Gate);
    }
    let mut outputs: Vec<(String, Vec<Psd>)> =
        vec![("homodyne".into(), hom), ("homodyne_symmetrized".into(), hom_sym), ("heterodyne".into(), het), ("het0".into(), het0)];
    for choice in filters {
        let mut sweep = cfg.clone();
        let (mut tbar, mut t0) = (Vec::new(), Vec::new());
        for &w in omegas {
            sweep.params.lo_omega = w;
            let f = filter_spec(&sweep, choice).expect("filtered choice");
            let c = filter_ft_coeffs(&f)?;
            for &t in thetas {
                let te = t - 0.5 * f.phase0;
                tbar.push(analytic::rheterodyne_psd(&s, w, te, c.f0, c.f2)?);
                t0.push(analytic::rheterodyne_t0_psd(&s, w, te, c.f0, c.f2)?);
            }
        }
        let name = f_name(choice);
        outputs.push((format!("rheterodyne_{name}"), tbar));
        outputs.push((format!("rheterodyne_t0_{name}"), t0));
    }
    for (name, psds) in &outputs {
        let path = out.join(format!("{name}.csv"));
        report::write_psd_rows(&path, psds)?;
        rep.files.push(path);
    }

    let (rows, summary) = report::theta_scan(&sym, cfg.params.omega_m, plan.rates.gamma_total, cfg.params.n_p, 128)?;
    let path = out.join("homodyne_theta_scan.csv");
    report::write_theta_scan(&path, &rows)?;
    rep.files.push(path);
    rep.squeezing = Some(summary);
    Ok(())
}

fn f_name(choice: FilterChoice) -> &'static str {
    match choice {
        FilterChoice::Standard => "standard",
        FilterChoice::Constant => "constant",
        FilterChoice::Toggle => "toggle",
        FilterChoice::Gate => "gate",
    }
}

fn run_phase_scan(cfg: &RunConfig, plan: &Plan, exec: Exec, rep: &mut Report) -> Result<()> {
    let inner = if exec.is_parallel() && par::current_threads() > 1 { Exec::Sequential } else { exec };
    let family = FilterSpec::gate(cfg.params.lo_omega, 0.0, cfg.lag.gate_halfwidth);
    let opts = estimator_options(cfg, plan, inner);
    let mut curves = Vec::new();
    for_each_realization(cfg, plan, exec, |_, trace| phase_scores(&trace, &family, cfg.n_phases, &opts), |c| {
        curves.push(c);
        Ok(())
    })?;
    let mean = ScoreCurves::mean(&curves).ok_or(Error::TooFewSamples { got: 0, needed: 1 })?;
    let path = cfg.out_dir.join("phase_scan.csv");
    report::write_phase_curves(&path, &mean)?;
    rep.files.push(path);
    rep.phase_scan = Some(summarize_scan(mean)?);
    Ok(())
}

/// Writes a config next to the outputs so a run can be reproduced.
pub fn write_resolved_config(dir: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    let path = dir.join("config.resolved");
    save_config(&path, cfg)?;
    Ok(path)
}
