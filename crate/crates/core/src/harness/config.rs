//! Flat `key = value` run configuration with `#` comments.
//!
//! Frequency-valued keys carry an `_hz` suffix and are stored internally in
//! rad/s. Keys missing from a file take their defaults, so presets only need
//! the physics.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::langevin::Scheme;
use crate::model::{OpticalMode, SystemParams};
use crate::spectra::filter::DEFAULT_GATE_HALFWIDTH;
use crate::spectra::{LagWindow, Sampling};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
    PhaseScan,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::PhaseScan => "phase-scan",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "compare" => Ok(Mode::Compare),
            "phase-scan" => Ok(Mode::PhaseScan),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// Filter family of a configured estimator; `Standard` is the plain
/// segment periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterChoice {
    Standard,
    Constant,
    Toggle,
    Gate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSpec {
    pub filter: FilterChoice,
    pub sampling: Sampling,
}

impl EstimatorSpec {
    pub fn standard() -> Self {
        Self { filter: FilterChoice::Standard, sampling: Sampling::None }
    }

    pub fn filtered(filter: FilterChoice, sampling: Sampling) -> Self {
        Self { filter, sampling }
    }

    /// `standard` or `<filter>:<sampling>`, e.g. `gate:tbar`.
    pub fn label(&self) -> String {
        match self.filter {
            FilterChoice::Standard => "standard".into(),
            f => {
                let name = match f {
                    FilterChoice::Constant => "constant",
                    FilterChoice::Toggle => "toggle",
                    _ => "gate",
                };
                format!("{name}:{}", self.sampling.name())
            }
        }
    }

    /// File-name friendly form of [`EstimatorSpec::label`].
    pub fn file_stem(&self) -> String {
        self.label().replace(':', "_")
    }
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "standard" {
            return Ok(Self::standard());
        }
        let (f, smp) = s.split_once(':').ok_or_else(|| format!("estimator `{s}` must be `standard` or `<filter>:<tbar|t0>`"))?;
        let filter = match f {
            "constant" => FilterChoice::Constant,
            "toggle" => FilterChoice::Toggle,
            "gate" => FilterChoice::Gate,
            _ => return Err(format!("unknown filter `{f}`")),
        };
        let sampling = match smp {
            "tbar" => Sampling::TBar,
            "t0" => Sampling::T0,
            _ => return Err(format!("unknown sampling `{smp}`")),
        };
        Ok(Self { filter, sampling })
    }
}

/// Simulation settings as written in the config; the concrete
/// [`crate::langevin::SimConfig`] depends on derived rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    /// Step in seconds; `None` uses the largest admissible `0.1 / omega_m`.
    pub dt: Option<f64>,
    pub n_samples: usize,
    pub n_realizations: usize,
    pub seed: u64,
    /// Discarded relaxation time in units of `1 / Gamma`.
    pub burn_in_gamma: f64,
    pub scheme: Scheme,
    pub dump_trajectories: bool,
    pub export_current: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSettings {
    /// Target `max_lag dt` in units of `1 / Gamma`, capped at `N / 4`.
    pub max_lag_gamma: f64,
    pub min_lag_gamma: f64,
    pub window: LagWindow,
    pub harmonics: usize,
    pub n_segments: usize,
    pub filter_phase: f64,
    pub gate_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub thetas: Vec<f64>,
    pub lo_omegas: Vec<f64>,
    /// Grid half-width in units of `omega_m`.
    pub max_omega_m: f64,
    /// Grid step in units of `Gamma`.
    pub step_gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: SystemParams,
    pub sim: SimSettings,
    pub estimators: Vec<EstimatorSpec>,
    pub lag: LagSettings,
    pub sweep: SweepSettings,
    pub n_phases: usize,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub plot: bool,
    /// Largest admissible fraction of `|z| > 3` for `compare --gate`.
    pub gate_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hz = |f: f64| f * TAU;
        Self {
            mode: Mode::Compare,
            params: SystemParams {
                omega_m: hz(1.53e6),
                gamma_m: hz(0.22),
                kappa: hz(1.7e6),
                modes: [OpticalMode::probe(hz(3.5e5), hz(-21e3)), OpticalMode::damper(hz(3.5e4), hz(-1.53e6))],
                t_bath: 4.6,
                n_p: 0.0,
                lo_omega: hz(1.53e5),
                lo_theta: 0.0,
            },
            sim: SimSettings {
                dt: None,
                n_samples: 1_000_000,
                n_realizations: 100,
                seed: 1,
                burn_in_gamma: crate::langevin::BURN_IN_GAMMA,
                scheme: Scheme::Exact,
                dump_trajectories: false,
                export_current: false,
            },
            estimators: vec![EstimatorSpec::filtered(FilterChoice::Gate, Sampling::TBar), EstimatorSpec::standard()],
            lag: LagSettings {
                max_lag_gamma: 50.0,
                min_lag_gamma: 30.0,
                window: LagWindow::Hann,
                harmonics: 9,
                n_segments: 1,
                filter_phase: 0.0,
                gate_halfwidth: DEFAULT_GATE_HALFWIDTH,
            },
            sweep: SweepSettings {
                thetas: (0..5).map(|k| k as f64 * PI / 5.0).collect(),
                lo_omegas: vec![hz(1.53e5)],
                max_omega_m: 2.5,
                step_gamma: 0.05,
            },
            n_phases: 32,
            out_dir: PathBuf::from("out"),
            threads: None,
            plot: false,
            gate_fraction: 0.01,
        }
    }
}

impl RunConfig {
    /// Structural checks that do not need derived rates.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let s = &self.sim;
        if s.n_samples == 0 || s.n_realizations == 0 {
            return Err(Error::Config("n_samples and n_realizations must be positive".into()));
        }
        if matches!(s.dt, Some(dt) if !(dt > 0.0 && dt.is_finite())) {
            return Err(Error::Config("dt_s must be positive".into()));
        }
        if !(s.burn_in_gamma >= 0.0) {
            return Err(Error::Config("burn_in_gamma must be >= 0".into()));
        }
        if matches!(self.mode, Mode::Simulate | Mode::Compare) && self.estimators.is_empty() {
            return Err(Error::Config("estimators must be nonempty for simulate and compare".into()));
        }
        if self.mode == Mode::Compare && s.n_realizations < 2 {
            return Err(Error::Config("compare needs at least 2 realizations".into()));
        }
        let l = &self.lag;
        if !(l.max_lag_gamma > 0.0 && l.min_lag_gamma >= 0.0) || l.n_segments == 0 {
            return Err(Error::Config("lag settings must be positive".into()));
        }
        if !(l.gate_halfwidth > 0.0 && l.gate_halfwidth <= PI) {
            return Err(Error::Config("gate_halfwidth_rad must lie in (0, pi]".into()));
        }
        if self.sweep.lo_omegas.is_empty() || self.sweep.thetas.is_empty() {
            return Err(Error::Config("sweep lists must be nonempty".into()));
        }
        if !(self.sweep.max_omega_m > 0.0 && self.sweep.step_gamma > 0.0) {
            return Err(Error::Config("sweep grid settings must be positive".into()));
        }
        if self.n_phases == 0 {
            return Err(Error::Config("n_phases must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gate_fraction) {
            return Err(Error::Config("gate_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Frequency-valued keys, without their `_hz` suffix.
const FREQ_KEYS: &[&str] = &[
    "omega_m",
    "gamma_m",
    "kappa",
    "probe_g",
    "probe_delta",
    "damper_g",
    "damper_delta",
    "lo_omega",
    "sweep_lo_omega",
];

const PLAIN_KEYS: &[&str] = &[
    "mode",
    "t_bath_k",
    "n_p",
    "lo_theta_rad",
    "dt_s",
    "n_samples",
    "n_realizations",
    "seed",
    "burn_in_gamma",
    "scheme",
    "dump_trajectories",
    "export_current",
    "estimators",
    "max_lag_gamma",
    "min_lag_gamma",
    "window",
    "harmonics",
    "n_segments",
    "filter_phase_rad",
    "gate_halfwidth_rad",
    "sweep_theta_rad",
    "sweep_max_omega_m",
    "sweep_step_gamma",
    "n_phases",
    "out",
    "threads",
    "plot",
    "gate_fraction",
];

fn is_known(key: &str) -> bool {
    PLAIN_KEYS.contains(&key) || key.strip_suffix("_hz").is_some_and(|k| FREQ_KEYS.contains(&k))
}

fn hz_to_rad(h: f64) -> f64 {
    h * TAU
}

/// The Hz value that maps back to exactly `omega` under [`hz_to_rad`], when
/// one exists within a few ulps of `omega / 2 pi`.
fn hz_for(omega: f64) -> f64 {
    let h = omega / TAU;
    if hz_to_rad(h) == omega || !h.is_finite() || h == 0.0 {
        return h;
    }
    let (mut up, mut down) = (h, h);
    for _ in 0..16 {
        up = up.next_up();
        down = down.next_down();
        for c in [up, down] {
            if hz_to_rad(c) == omega {
                return c;
            }
        }
    }
    h
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_value<T: FromStr>(key: &str, e: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value.parse::<T>().map_err(|err| Error::Parse { line: e.line, msg: format!("{key}: {err}") })
}

fn parse_list<T: FromStr>(key: &str, e: &Entry) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|err| Error::Parse { line: e.line, msg: format!("{key}: {err}") }))
        .collect()
}

fn parse_bool(key: &str, e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(Error::Parse { line: e.line, msg: format!("{key}: expected a boolean, got `{v}`") }),
    }
}

/// Parses config text on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(String, Entry)> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let (key, value) = (k.trim().to_string(), v.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse { line, msg: "empty key or value".into() });
        }
        if !is_known(&key) {
            if FREQ_KEYS.contains(&key.as_str()) {
                return Err(Error::UnitSuffixMissing { line, key });
            }
            return Err(Error::UnknownKey { line, key });
        }
        if !seen.insert(key.clone()) {
            return Err(Error::Parse { line, msg: format!("duplicate key `{key}`") });
        }
        entries.push((key, Entry { line, value }));
    }

    let mut cfg = RunConfig::default();
    for (key, e) in &entries {
        let k = key.as_str();
        let p = &mut cfg.params;
        match k {
            "mode" => cfg.mode = parse_value(k, e)?,
            "omega_m_hz" => p.omega_m = hz_to_rad(parse_value(k, e)?),
            "gamma_m_hz" => p.gamma_m = hz_to_rad(parse_value(k, e)?),
            "kappa_hz" => p.kappa = hz_to_rad(parse_value(k, e)?),
            "probe_g_hz" => p.modes[0].g = hz_to_rad(parse_value(k, e)?),
            "probe_delta_hz" => p.modes[0].delta = hz_to_rad(parse_value(k, e)?),
            "damper_g_hz" => p.modes[1].g = hz_to_rad(parse_value(k, e)?),
            "damper_delta_hz" => p.modes[1].delta = hz_to_rad(parse_value(k, e)?),
            "lo_omega_hz" => p.lo_omega = hz_to_rad(parse_value(k, e)?),
            "t_bath_k" => p.t_bath = parse_value(k, e)?,
            "n_p" => p.n_p = parse_value(k, e)?,
            "lo_theta_rad" => p.lo_theta = parse_value(k, e)?,
            "dt_s" => cfg.sim.dt = if e.value == "auto" { None } else { Some(parse_value(k, e)?) },
            "n_samples" => cfg.sim.n_samples = parse_value(k, e)?,
            "n_realizations" => cfg.sim.n_realizations = parse_value(k, e)?,
            "seed" => cfg.sim.seed = parse_value(k, e)?,
            "burn_in_gamma" => cfg.sim.burn_in_gamma = parse_value(k, e)?,
            "scheme" => {
                cfg.sim.scheme = match e.value.as_str() {
                    "exact" => Scheme::Exact,
                    "euler" => Scheme::EulerMaruyama,
                    v => return Err(Error::Parse { line: e.line, msg: format!("scheme: expected exact or euler, got `{v}`") }),
                }
            }
            "dump_trajectories" => cfg.sim.dump_trajectories = parse_bool(k, e)?,
            "export_current" => cfg.sim.export_current = parse_bool(k, e)?,
            "estimators" => cfg.estimators = parse_list(k, e)?,
            "max_lag_gamma" => cfg.lag.max_lag_gamma = parse_value(k, e)?,
            "min_lag_gamma" => cfg.lag.min_lag_gamma = parse_value(k, e)?,
            "window" => {
                cfg.lag.window = match e.value.as_str() {
                    "hann" => LagWindow::Hann,
                    "rectangular" => LagWindow::Rectangular,
                    v => return Err(Error::Parse { line: e.line, msg: format!("window: expected hann or rectangular, got `{v}`") }),
                }
            }
            "harmonics" => cfg.lag.harmonics = parse_value(k, e)?,
            "n_segments" => cfg.lag.n_segments = parse_value(k, e)?,
            "filter_phase_rad" => cfg.lag.filter_phase = parse_value(k, e)?,
            "gate_halfwidth_rad" => cfg.lag.gate_halfwidth = parse_value(k, e)?,
            "sweep_theta_rad" => cfg.sweep.thetas = parse_list(k, e)?,
            "sweep_lo_omega_hz" => cfg.sweep.lo_omegas = parse_list::<f64>(k, e)?.into_iter().map(hz_to_rad).collect(),
            "sweep_max_omega_m" => cfg.sweep.max_omega_m = parse_value(k, e)?,
            "sweep_step_gamma" => cfg.sweep.step_gamma = parse_value(k, e)?,
            "n_phases" => cfg.n_phases = parse_value(k, e)?,
            "out" => cfg.out_dir = PathBuf::from(&e.value),
            "threads" => cfg.threads = if e.value == "auto" { None } else { Some(parse_value(k, e)?) },
            "plot" => cfg.plot = parse_bool(k, e)?,
            "gate_fraction" => cfg.gate_fraction = parse_value(k, e)?,
            _ => unreachable!("key list and match arms disagree on `{k}`"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn list<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Serializes every field; `parse_config(&to_config_string(c)) == c`.
pub fn to_config_string(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let hz = |w: f64| format!("{:e}", hz_for(w));
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("mode", cfg.mode.name().into());
    put("omega_m_hz", hz(p.omega_m));
    put("gamma_m_hz", hz(p.gamma_m));
    put("kappa_hz", hz(p.kappa));
    put("probe_g_hz", hz(p.modes[0].g));
    put("probe_delta_hz", hz(p.modes[0].delta));
    put("damper_g_hz", hz(p.modes[1].g));
    put("damper_delta_hz", hz(p.modes[1].delta));
    put("t_bath_k", format!("{:e}", p.t_bath));
    put("n_p", format!("{:e}", p.n_p));
    put("lo_omega_hz", hz(p.lo_omega));
    put("lo_theta_rad", format!("{:e}", p.lo_theta));
    let sim = &cfg.sim;
    put("dt_s", sim.dt.map_or("auto".into(), |d| format!("{d:e}")));
    put("n_samples", sim.n_samples.to_string());
    put("n_realizations", sim.n_realizations.to_string());
    put("seed", sim.seed.to_string());
    put("burn_in_gamma", format!("{:e}", sim.burn_in_gamma));
    put("scheme", if sim.scheme == Scheme::Exact { "exact" } else { "euler" }.into());
    put("dump_trajectories", sim.dump_trajectories.to_string());
    put("export_current", sim.export_current.to_string());
    put("estimators", list(&cfg.estimators, EstimatorSpec::label));
    let l = &cfg.lag;
    put("max_lag_gamma", format!("{:e}", l.max_lag_gamma));
    put("min_lag_gamma", format!("{:e}", l.min_lag_gamma));
    put("window", l.window.name().into());
    put("harmonics", l.harmonics.to_string());
    put("n_segments", l.n_segments.to_string());
    put("filter_phase_rad", format!("{:e}", l.filter_phase));
    put("gate_halfwidth_rad", format!("{:e}", l.gate_halfwidth));
    put("sweep_theta_rad", list(&cfg.sweep.thetas, |t| format!("{t:e}")));
    put("sweep_lo_omega_hz", list(&cfg.sweep.lo_omegas, |w| hz(*w)));
    put("sweep_max_omega_m", format!("{:e}", cfg.sweep.max_omega_m));
    put("sweep_step_gamma", format!("{:e}", cfg.sweep.step_gamma));
    put("n_phases", cfg.n_phases.to_string());
    put("out", cfg.out_dir.display().to_string());
    put("threads", cfg.threads.map_or("auto".into(), |t| t.to_string()));
    put("plot", cfg.plot.to_string());
    put("gate_fraction", format!("{:e}", cfg.gate_fraction));
    s
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn save_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::write(path, to_config_string(cfg))?;
    Ok(())
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig1bc", include_str!("../../presets/fig1bc.preset")),
    ("fig1d", include_str!("../../presets/fig1d.preset")),
    ("fig2", include_str!("../../presets/fig2.preset")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| Error::UnknownPreset(name.into()))
}

pub fn preset(name: &str) -> Result<RunConfig> {
    parse_config(preset_text(name)?)
}
