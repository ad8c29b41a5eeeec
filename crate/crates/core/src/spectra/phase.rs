//! Search for the filter phase that reproduces the full heterodyne spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::estimator::{check_lags, direct_autocorr, lag_psd, use_direct, EstimatorOptions, LagCorrelator, Sampling};
use super::filter::{FilterKind, FilterSpec};
use crate::detect::CurrentTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    pub phases: Vec<f64>,
    /// L2 distance between the `1/f0`-rescaled filtered PSD and the unfiltered one.
    pub scores: Vec<f64>,
    /// Scores at `phase + pi`; equal to `scores` in expectation.
    pub shifted_scores: Vec<f64>,
    /// Phase whose filtered spectrum best matches plain heterodyne.
    pub heterodyne_match: f64,
    /// `heterodyne_match + pi/2`: maximal coherence recovery.
    pub rheterodyne: f64,
    /// Peak-to-peak amplitude of the fitted `e^{2 i phi0}` harmonic.
    pub variation: f64,
    /// Standard error of `variation`.
    pub noise: f64,
    /// False when the scan cannot identify a phase (single point).
    pub identifiable: bool,
}

/// Raw score curves of a phase scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCurves {
    pub phases: Vec<f64>,
    pub scores: Vec<f64>,
    pub shifted_scores: Vec<f64>,
}

impl ScoreCurves {
    /// Pointwise mean of curves sharing the same phases.
    pub fn mean(curves: &[ScoreCurves]) -> Option<ScoreCurves> {
        let first = curves.first()?;
        let n = curves.len() as f64;
        let avg = |f: fn(&ScoreCurves) -> &Vec<f64>| -> Vec<f64> {
            (0..first.phases.len()).map(|i| curves.iter().map(|c| f(c)[i]).sum::<f64>() / n).collect()
        };
        Some(ScoreCurves { phases: first.phases.clone(), scores: avg(|c| &c.scores), shifted_scores: avg(|c| &c.shifted_scores) })
    }
}

/// Score of the gate family at `n_phases` uniform phases and at their
/// `+pi` partners.
pub fn phase_scores(trace: &CurrentTrace, family: &FilterSpec, n_phases: usize, opts: &EstimatorOptions) -> Result<ScoreCurves> {
    let FilterKind::Gate { .. } = family.kind else {
        return Err(Error::Config("phase search needs a gate filter".into()));
    };
    if n_phases == 0 {
        return Err(Error::Config("n_phases must be positive".into()));
    }
    family.validate()?;
    check_lags(trace.len(), opts)?;
    let f0 = family.harmonic_coeffs(0)[0].re;

    let direct = use_direct(trace.len(), family, opts);
    let corr = (!direct).then(|| LagCorrelator::new(trace, family.omega_lo, opts.max_lag, opts.harmonics, opts.exec));
    let autocorr = |spec: &FilterSpec, sampling: Sampling| match &corr {
        Some(c) => c.autocorr(spec, sampling),
        None => direct_autocorr(trace, spec, sampling, opts.max_lag, opts.exec),
    };
    let (grid, reference) = lag_psd(&autocorr(&FilterSpec::constant(), Sampling::None), trace.dt, opts.window);
    let score = |phase: f64| {
        let r = autocorr(&family.with_phase(phase), Sampling::TBar);
        let (_, p) = lag_psd(&r, trace.dt, opts.window);
        let ss: f64 = p.iter().zip(&reference).map(|(a, b)| (a / f0 - b).powi(2)).sum();
        (ss * grid.step()).sqrt()
    };

    let phases: Vec<f64> = (0..n_phases).map(|j| 2.0 * PI * j as f64 / n_phases as f64).collect();
    let scores: Vec<f64> = phases.iter().map(|&p| score(p)).collect();
    let shifted_scores: Vec<f64> = phases.iter().map(|&p| score(p + PI)).collect();
    Ok(ScoreCurves { phases, scores, shifted_scores })
}

/// Scans `phase0` over `n_phases` points in `[0, 2 pi)` for a gate-family
/// filter. With `n_phases == 1` the single phase is returned with
/// `identifiable == false` instead of a [`Error::FlatScore`].
pub fn lo_phase_search(trace: &CurrentTrace, family: &FilterSpec, n_phases: usize, opts: &EstimatorOptions) -> Result<PhaseScan> {
    summarize_scan(phase_scores(trace, family, n_phases, opts)?)
}

/// Picks the best-matching phase from (possibly ensemble-averaged) curves.
pub fn summarize_scan(curves: ScoreCurves) -> Result<PhaseScan> {
    let ScoreCurves { phases, scores, shifted_scores } = curves;
    let n_phases = phases.len();
    if n_phases == 0 || scores.len() != n_phases || shifted_scores.len() != n_phases {
        return Err(Error::Config("score curves must be nonempty and of equal length".into()));
    }
    // Average each phase with its pi partner, then fit the pi-periodic
    // harmonic; its peak-to-peak amplitude is the phase signal and the
    // partner differences give its estimation noise.
    let sym: Vec<f64> = scores.iter().zip(&shifted_scores).map(|(a, b)| 0.5 * (a + b)).collect();
    let best = sym.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let heterodyne_match = phases[best];
    let rheterodyne = (heterodyne_match + PI / 2.0).rem_euclid(2.0 * PI);

    let n = n_phases as f64;
    let a2: Complex64 = phases.iter().zip(&sym).map(|(p, v)| v * Complex64::from_polar(1.0, -2.0 * p)).sum::<Complex64>() * (2.0 / n);
    let variation = 2.0 * a2.norm();
    let sigma = (scores.iter().zip(&shifted_scores).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt() / 2.0;
    let dof = if n_phases % 2 == 0 { 4.0 } else { 2.0 };
    let noise = 2.0 * sigma * (dof / n).sqrt();

    let identifiable = n_phases > 1;
    if identifiable && variation < 3.0 * noise {
        return Err(Error::FlatScore { variation, noise });
    }
    Ok(PhaseScan { phases, scores, shifted_scores, heterodyne_match, rheterodyne, variation, noise, identifiable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::heterodyne_current;
    use crate::spectra::estimator::Method;

    fn tone(theta: f64) -> CurrentTrace {
        let (n, dt) = (20_000, 1e-3);
        let omega = 2.0 * PI * 11.3;
        heterodyne_current(&vec![Complex64::new(1.0, 0.0); n], dt, omega, theta).unwrap()
    }

    #[test]
    fn recovers_tone_phase() {
        let theta = 0.7;
        let t = tone(theta);
        let n_phases = 64;
        let family = FilterSpec::gate(t.lo_omega, 0.0, PI / 3.0);
        let opts = EstimatorOptions::new(2000).method(Method::Harmonic);
        let scan = lo_phase_search(&t, &family, n_phases, &opts).unwrap();
        // The rescaled gate spectrum deviates by (2 f2 / f0) cos(phi0 - 2 theta).
        let predicted = (2.0 * theta + PI / 2.0).rem_euclid(PI);
        let step = 2.0 * PI / n_phases as f64;
        let d = (scan.heterodyne_match.rem_euclid(PI) - predicted).abs();
        assert!(d.min(PI - d) <= step, "{} vs {predicted}", scan.heterodyne_match);
        let r = (scan.rheterodyne - 2.0 * theta).rem_euclid(PI);
        assert!(r.min(PI - r) <= step);
    }

    #[test]
    fn score_is_pi_periodic() {
        let t = tone(0.2);
        let family = FilterSpec::gate(t.lo_omega, 0.0, PI / 3.0);
        let scan = lo_phase_search(&t, &family, 16, &EstimatorOptions::new(2000).method(Method::Harmonic)).unwrap();
        let scale = scan.scores.iter().cloned().fold(0.0, f64::max);
        for (a, b) in scan.scores.iter().zip(&scan.shifted_scores) {
            assert!((a - b).abs() < 1e-3 * scale);
        }
    }

    #[test]
    fn single_phase_is_returned_unidentified() {
        let t = tone(0.2);
        let family = FilterSpec::gate(t.lo_omega, 0.0, PI / 3.0);
        let scan = lo_phase_search(&t, &family, 1, &EstimatorOptions::new(500)).unwrap();
        assert_eq!(scan.heterodyne_match, 0.0);
        assert!(!scan.identifiable);
    }

    #[test]
    fn flat_score_on_white_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let i = (0..20_000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let t = CurrentTrace { i, dt: 1e-3, t0: 5e-4, lo_omega: 2.0 * PI * 11.3, lo_theta: 0.0, seed: 5, realization: 0 };
        let family = FilterSpec::gate(t.lo_omega, 0.0, PI / 3.0);
        let r = lo_phase_search(&t, &family, 16, &EstimatorOptions::new(200).method(Method::Harmonic));
        assert!(matches!(r, Err(Error::FlatScore { .. })), "{r:?}");
    }

    #[test]
    fn non_gate_family_is_rejected() {
        let t = tone(0.0);
        let r = lo_phase_search(&t, &FilterSpec::toggle(t.lo_omega, 0.0), 8, &EstimatorOptions::new(100));
        assert!(r.is_err());
    }
}
