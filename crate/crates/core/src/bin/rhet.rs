use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}
use rhet_core::harness::{self, Mode, Report, RunConfig};
use rhet_core::{Error, Result};

/// Stochastic heterodyne simulation and filtered-autocorrelation spectra.
#[derive(Parser)]
#[command(name = "rhet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic spectra over the configured LO phase and frequency sweep.
    Analytic(Common),
    /// Stochastic ensemble and PSD estimates.
    Simulate(Common),
    /// Ensemble estimates against the symmetrized analytic prediction.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 if a filtered estimator exceeds the |z| > 3 budget.
        #[arg(long, env = "RHET_GATE")]
        gate: bool,
    },
    /// Filter-phase scan for the heterodyne-matching gate.
    PhaseScan(Common),
    /// Print a bundled preset.
    Preset {
        /// Preset name; lists the available presets when omitted.
        name: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value`); takes precedence over --preset.
    #[arg(long, env = "RHET_CONFIG")]
    config: Option<PathBuf>,
    /// Bundled preset: fig1bc, fig1d or fig2.
    #[arg(long, env = "RHET_PRESET")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, env = "RHET_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "RHET_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "RHET_REALIZATIONS")]
    realizations: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "RHET_THREADS")]
    threads: Option<usize>,
    /// Also render SVG overlays.
    #[arg(long, env = "RHET_PLOT")]
    plot: bool,
}

impl Common {
    fn resolve(&self, mode: Mode) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => harness::load_config(path)?,
            (None, Some(name)) => harness::preset(name)?,
            (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
        };
        cfg.mode = mode;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(r) = self.realizations {
            cfg.sim.n_realizations = r;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.plot |= self.plot;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(rep: &Report) {
    if let Some(r) = &rep.rates {
        out!("Gamma/2pi = {:.4e} Hz, n_bar = {:.4}", r.gamma_total / std::f64::consts::TAU, r.n_bar);
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    for (spec, s) in &rep.residuals {
        out!(
            "{:<12} band points {:>6}  max|z| {:>7.3}  frac(|z|>3) {:.4}  mean z {:+.3}",
            spec.label(),
            s.n_band,
            s.max_abs_z,
            s.frac_above_3,
            s.mean_z
        );
    }
    if let Some(s) = &rep.squeezing {
        out!(
            "min symmetrized homodyne {:.4} (floor {}) at omega/2pi = {:.6e} Hz, theta = {:.4}",
            s.min_value,
            s.floor,
            s.omega / std::f64::consts::TAU,
            s.theta
        );
    }
    if let Some(p) = &rep.phase_scan {
        out!("heterodyne-matching phase {:.4} rad, r-heterodyne phase {:.4} rad", p.heterodyne_match, p.rheterodyne);
    }
    for f in &rep.files {
        out!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, mode, gate) = match &cli.command {
        Command::Analytic(c) => (c, Mode::Analytic, false),
        Command::Simulate(c) => (c, Mode::Simulate, false),
        Command::Compare { common, gate } => (common, Mode::Compare, *gate),
        Command::PhaseScan(c) => (c, Mode::PhaseScan, false),
        Command::Preset { name: Some(name) } => {
            return match harness::preset_text(name) {
                Ok(text) => {
                    out!("{}", text.trim_end());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Preset { name: None } => {
            for n in harness::preset_names() {
                out!("{n}");
            }
            return ExitCode::SUCCESS;
        }
    };
    let result = common.resolve(mode).and_then(|cfg| harness::run(&cfg).map(|rep| (cfg, rep)));
    match result {
        Ok((cfg, rep)) => {
            print_report(&rep);
            if gate && !rep.gate_passed(cfg.gate_fraction) {
                eprintln!("gate failed: fraction of |z| > 3 exceeds {}", cfg.gate_fraction);
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
