//! Residual statistics and the CSV / text writers of the harness.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Plan, Report, RunConfig};
use crate::analytic::{homodyne_psd, symmetrize, Psd, SpectrumSet};
use crate::error::Result;
use crate::spectra::{PsdEstimate, ScoreCurves};

/// Stochastic estimate against its analytic prediction at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub omega: f64,
    pub mean: f64,
    pub std_err: f64,
    pub analytic: f64,
    /// `(mean - analytic) / std_err`; NaN when the error is zero.
    pub z: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    /// Points inside the sideband band with a finite z-score.
    pub n_band: usize,
    pub max_abs_z: f64,
    pub frac_above_3: f64,
    pub mean_z: f64,
    /// Same fraction over every compared frequency.
    pub n_all: usize,
    pub frac_above_3_all: f64,
}

/// Minimum of the symmetrized homodyne PSD over a dense phase scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSummary {
    pub min_value: f64,
    pub omega: f64,
    pub theta: f64,
    /// Imprecision floor `2 n_p + 1`.
    pub floor: f64,
}

impl SqueezingSummary {
    pub fn below_floor(&self) -> bool {
        self.min_value < self.floor
    }
}

/// Union of `c +/- halfwidth_gamma * Gamma` for the carrier and both LO
/// shifts of the mechanical sideband, restricted to `omega >= 0`.
pub fn sideband_band(omega_m: f64, omega_lo: f64, gamma: f64, halfwidth_gamma: f64) -> Vec<(f64, f64)> {
    let h = halfwidth_gamma * gamma;
    let mut iv: Vec<(f64, f64)> = [omega_m - omega_lo, omega_m, omega_m + omega_lo]
        .iter()
        .map(|c| ((c - h).max(0.0), c + h))
        .filter(|(a, b)| b > a)
        .collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Per-frequency z-scores on `omega >= 0` wherever the prediction is defined.
pub fn residuals(est: &PsdEstimate, pred: &Psd, band: &[(f64, f64)]) -> (Vec<Residual>, ResidualSummary) {
    let mut rows = Vec::new();
    for (j, w) in est.grid.omegas().enumerate() {
        if w < 0.0 {
            continue;
        }
        let Some(a) = pred.at(w) else { continue };
        let (m, se) = (est.mean[j], est.std_err[j]);
        let z = if se > 0.0 { (m - a) / se } else { f64::NAN };
        let in_band = band.iter().any(|(lo, hi)| w >= *lo && w <= *hi);
        rows.push(Residual { omega: w, mean: m, std_err: se, analytic: a, z, in_band });
    }
    let stats = |pick: &dyn Fn(&Residual) -> bool| {
        let zs: Vec<f64> = rows.iter().filter(|r| pick(r) && r.z.is_finite()).map(|r| r.z).collect();
        let n = zs.len();
        let above = zs.iter().filter(|z| z.abs() > 3.0).count();
        let frac = if n > 0 { above as f64 / n as f64 } else { f64::NAN };
        let mean = if n > 0 { zs.iter().sum::<f64>() / n as f64 } else { f64::NAN };
        let max = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        (n, frac, mean, max)
    };
    let (n_band, frac_above_3, mean_z, max_abs_z) = stats(&|r| r.in_band);
    let (n_all, frac_above_3_all, _, _) = stats(&|_| true);
    (rows, ResidualSummary { n_band, max_abs_z, frac_above_3, mean_z, n_all, frac_above_3_all })
}

/// `(omega, theta, value)` sample of a phase scan.
pub type ThetaRow = (f64, f64, f64);

/// Symmetrized homodyne PSD within `omega_m +/- 20 Gamma` for `n_theta`
/// phases in `[0, pi)`; rows are `(omega, theta, value)`.
pub fn theta_scan(sym: &SpectrumSet, omega_m: f64, gamma: f64, n_p: f64, n_theta: usize) -> Result<(Vec<ThetaRow>, SqueezingSummary)> {
    let mut rows = Vec::new();
    let mut best = SqueezingSummary { min_value: f64::INFINITY, omega: 0.0, theta: 0.0, floor: 2.0 * n_p + 1.0 };
    for k in 0..n_theta {
        let theta = k as f64 * PI / n_theta as f64;
        let p = symmetrize(&homodyne_psd(sym, theta)?)?;
        for (j, w) in p.grid.omegas().enumerate() {
            if (w - omega_m).abs() > 20.0 * gamma {
                continue;
            }
            let v = p.values[j];
            rows.push((w, theta, v));
            if v < best.min_value {
                best = SqueezingSummary { min_value: v, omega: w, theta, ..best };
            }
        }
    }
    Ok((rows, best))
}

fn csv(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

/// `omega_rad_s,value,theta,Omega,kind` rows for a sweep of analytic PSDs.
pub fn write_psd_rows(path: &Path, psds: &[Psd]) -> Result<()> {
    let mut w = csv(path)?;
    writeln!(w, "omega_rad_s,value,theta,Omega,kind")?;
    for p in psds {
        let (theta, omega_lo) = (opt(p.meta.theta), opt(p.meta.omega_lo));
        for (om, v) in p.grid.omegas().zip(&p.values) {
            writeln!(w, "{om:e},{v:e},{theta},{omega_lo},{}", p.kind.name())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_theta_scan(path: &Path, rows: &[ThetaRow]) -> Result<()> {
    let mut w = csv(path)?;
    writeln!(w, "omega_rad_s,theta,value")?;
    for (om, t, v) in rows {
        writeln!(w, "{om:e},{t:e},{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_residuals(path: &Path, rows: &[Residual]) -> Result<()> {
    let mut w = csv(path)?;
    writeln!(w, "omega_rad_s,mean,std_err,analytic,z,in_band")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e},{}", r.omega, r.mean, r.std_err, r.analytic, r.z, u8::from(r.in_band))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_phase_curves(path: &Path, c: &ScoreCurves) -> Result<()> {
    let mut w = csv(path)?;
    writeln!(w, "phase_rad,score,shifted_score")?;
    for ((p, s), t) in c.phases.iter().zip(&c.scores).zip(&c.shifted_scores) {
        writeln!(w, "{p:e},{s:e},{t:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` run summary.
pub fn write_summary(path: &Path, cfg: &RunConfig, plan: &Plan, rep: &Report) -> Result<()> {
    let mut w = csv(path)?;
    let hz = |x: f64| x / (2.0 * PI);
    writeln!(w, "mode = {}", cfg.mode.name())?;
    let r = &plan.rates;
    writeln!(w, "gamma_opt_hz = {:e}", hz(r.gamma_opt))?;
    writeln!(w, "gamma_total_hz = {:e}", hz(r.gamma_total))?;
    writeln!(w, "n_th = {:e}", r.n_th)?;
    writeln!(w, "n_bar = {:e}", r.n_bar)?;
    writeln!(w, "dt_s = {:e}", plan.sim.dt)?;
    writeln!(w, "burn_in_steps = {}", plan.sim.burn_in)?;
    writeln!(w, "max_lag = {}", plan.max_lag)?;
    for msg in &rep.warnings {
        writeln!(w, "warning = {msg}")?;
    }
    for (spec, s) in &rep.residuals {
        let l = spec.label();
        writeln!(w, "residual.{l}.n_band = {}", s.n_band)?;
        writeln!(w, "residual.{l}.max_abs_z = {:e}", s.max_abs_z)?;
        writeln!(w, "residual.{l}.frac_above_3 = {:e}", s.frac_above_3)?;
        writeln!(w, "residual.{l}.mean_z = {:e}", s.mean_z)?;
        writeln!(w, "residual.{l}.frac_above_3_all = {:e}", s.frac_above_3_all)?;
    }
    if let Some(s) = &rep.squeezing {
        writeln!(w, "squeezing.min = {:e}", s.min_value)?;
        writeln!(w, "squeezing.floor = {:e}", s.floor)?;
        writeln!(w, "squeezing.omega_rad_s = {:e}", s.omega)?;
        writeln!(w, "squeezing.theta_rad = {:e}", s.theta)?;
        writeln!(w, "squeezing.below_floor = {}", s.below_floor())?;
    }
    if let Some(p) = &rep.phase_scan {
        writeln!(w, "phase.heterodyne_match_rad = {:e}", p.heterodyne_match)?;
        writeln!(w, "phase.rheterodyne_rad = {:e}", p.rheterodyne)?;
        writeln!(w, "phase.variation = {:e}", p.variation)?;
        writeln!(w, "phase.noise = {:e}", p.noise)?;
        writeln!(w, "phase.identifiable = {}", p.identifiable)?;
    }
    w.flush()?;
    Ok(())
}
