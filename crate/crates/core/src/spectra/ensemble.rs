//! Ensemble statistics over realizations.

use super::estimator::{psd_filtered_t0, psd_filtered_tbar, psd_standard_with, EstimatorOptions, PsdEstimate, Sampling};
use super::filter::FilterSpec;
use crate::detect::CurrentTrace;
use crate::error::{Error, Result};
use crate::par::{try_map_range, Exec};

/// An estimator together with its arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Standard { n_segments: usize },
    Filtered { filter: FilterSpec, sampling: Sampling, options: EstimatorOptions },
}

impl Estimator {
    pub fn apply(&self, trace: &CurrentTrace) -> Result<PsdEstimate> {
        match self {
            Estimator::Standard { n_segments } => psd_standard_with(trace, *n_segments, Exec::Sequential),
            Estimator::Filtered { filter, sampling: Sampling::T0, options } => psd_filtered_t0(trace, filter, options),
            Estimator::Filtered { filter, options, .. } => psd_filtered_tbar(trace, filter, options),
        }
    }
}

/// Running per-frequency mean and variance (Welford). Push order is the
/// only source of floating-point differences, so callers merge in
/// realization order.
#[derive(Debug, Clone, Default)]
pub struct EnsembleAccumulator {
    template: Option<PsdEstimate>,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    sources: Vec<(u64, u64)>,
}

impl EnsembleAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn push(&mut self, est: PsdEstimate) -> Result<()> {
        match &self.template {
            None => {
                self.mean = vec![0.0; est.mean.len()];
                self.m2 = vec![0.0; est.mean.len()];
            }
            Some(t) => {
                if t.grid != est.grid || t.kind != est.kind || t.sampling != est.sampling || t.lo_omega != est.lo_omega || t.lo_theta != est.lo_theta {
                    return Err(Error::HeterogeneousTraces("estimate metadata differs between realizations".into()));
                }
            }
        }
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(&est.mean) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
        self.sources.extend_from_slice(&est.sources);
        if self.template.is_none() {
            self.template = Some(PsdEstimate { mean: Vec::new(), std_err: Vec::new(), sources: Vec::new(), ..est });
        }
        Ok(())
    }

    pub fn finish(self) -> Result<PsdEstimate> {
        let t = self.template.ok_or(Error::TooFewSamples { got: 0, needed: 1 })?;
        let n = self.count as f64;
        let std_err = if self.count > 1 {
            self.m2.iter().map(|s| (s.max(0.0) / (n - 1.0) / n).sqrt()).collect()
        } else {
            vec![0.0; self.mean.len()]
        };
        Ok(PsdEstimate { mean: self.mean, std_err, n_realizations: self.count, sources: self.sources, ..t })
    }
}

/// Mean and standard error of `estimator` across `traces`.
pub fn ensemble_psd(traces: &[CurrentTrace], estimator: &Estimator, exec: Exec) -> Result<PsdEstimate> {
    if traces.len() < 2 {
        return Err(Error::TooFewSamples { got: traces.len(), needed: 2 });
    }
    if let Some(bad) = traces.iter().position(|t| !t.is_compatible(&traces[0])) {
        return Err(Error::HeterogeneousTraces(format!("trace {bad} differs in length, dt, t0 or LO settings")));
    }
    let estimates = try_map_range(exec, traces.len(), |r| estimator.apply(&traces[r]))?;
    let mut acc = EnsembleAccumulator::new();
    for e in estimates {
        acc.push(e)?;
    }
    acc.finish()
}
