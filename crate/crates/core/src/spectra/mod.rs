//! PSD estimators: segment periodogram, mid-point (`t_bar`) and start-time
//! (`t0`) filtered autocorrelations, filter coefficients, LO phase search and
//! ensemble statistics.

mod ensemble;
mod estimator;
pub mod filter;
mod phase;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use ensemble::{ensemble_psd, EnsembleAccumulator, Estimator};
pub use estimator::{
    check_lags, direct_autocorr, filtered_autocorr, filtered_estimate, lag_psd, psd_filtered_t0, psd_filtered_tbar,
    psd_standard, psd_standard_with, use_direct, EstimatorKind, EstimatorOptions, LagCorrelator, LagWindow, Method,
    PsdEstimate, Sampling,
};
pub use filter::{filter_ft_coeffs, numeric_coeffs, FilterCoeffs, FilterKind, FilterSpec};
pub use phase::{lo_phase_search, phase_scores, summarize_scan, PhaseScan, ScoreCurves};

use crate::error::Result;

/// Writes `omega_rad_s,mean,std_err` plus a `.meta` sidecar. `extra` lines
/// (`key = value`) are appended to the sidecar.
pub fn write_estimate(path: &Path, est: &PsdEstimate, extra: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "omega_rad_s,mean,std_err")?;
    for (j, (m, s)) in est.mean.iter().zip(&est.std_err).enumerate() {
        writeln!(w, "{:e},{:e},{:e}", est.grid.omega(j), m, s)?;
    }
    w.flush()?;

    let mut meta = BufWriter::new(File::create(path.with_extension("meta"))?);
    let mut line = |k: &str, v: String| writeln!(meta, "{k} = {v}");
    match &est.kind {
        EstimatorKind::Standard { n_segments } => {
            line("estimator", "standard".into())?;
            line("n_segments", n_segments.to_string())?;
        }
        EstimatorKind::Filtered { filter, coeffs, max_lag, window } => {
            line("estimator", "filtered".into())?;
            line("filter", filter.name().into())?;
            if let FilterKind::Gate { halfwidth } = filter.kind {
                line("gate_halfwidth", format!("{halfwidth:e}"))?;
            }
            line("phase0", format!("{:e}", filter.phase0))?;
            line("f0", format!("{:e}", coeffs.f0))?;
            line("f2", format!("{:e}", coeffs.f2))?;
            line("max_lag", max_lag.to_string())?;
            line("window", window.name().into())?;
        }
    }
    line("sampling", est.sampling.name().into())?;
    line("omega_lo", format!("{:e}", est.lo_omega))?;
    line("theta", format!("{:e}", est.lo_theta))?;
    line("n_realizations", est.n_realizations.to_string())?;
    let seeds: Vec<String> = est.sources.iter().map(|(s, r)| format!("{s}:{r}")).collect();
    line("sources", seeds.join(","))?;
    for (k, v) in extra {
        line(k, v.clone())?;
    }
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    line("created_unix", stamp.to_string())?;
    meta.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::CurrentTrace;

    #[test]
    fn csv_and_sidecar() {
        let t = CurrentTrace { i: (0..400).map(|k| (k as f64 * 0.37).sin()).collect(), dt: 0.1, t0: 0.05, lo_omega: 1.0, lo_theta: 0.2, seed: 9, realization: 2 };
        let est = psd_filtered_tbar(&t, &FilterSpec::gate(1.0, 0.0, 1.0), &EstimatorOptions::new(50)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_estimate(&p, &est, &[]).unwrap();
        let csv = std::fs::read_to_string(&p).unwrap();
        assert!(csv.starts_with("omega_rad_s,mean,std_err\n"));
        assert_eq!(csv.lines().count(), est.mean.len() + 1);
        let meta = std::fs::read_to_string(dir.path().join("x.meta")).unwrap();
        assert!(meta.contains("filter = gate") && meta.contains("sources = 9:2") && meta.contains("sampling = tbar"));
    }
}
