//! Heterodyne photocurrent synthesis.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::binio::{self, HeaderReader, HeaderWriter};
use crate::error::{Error, Result};
use crate::langevin::{output_field, Trajectory};
use crate::model::ModeRole;

/// Real photocurrent `i(t_k)` sampled at `t_k = t0 + k dt`, normalized to the
/// LO amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub i: Vec<f64>,
    pub dt: f64,
    pub t0: f64,
    pub lo_omega: f64,
    pub lo_theta: f64,
    pub seed: u64,
    pub realization: u64,
}

impl CurrentTrace {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Same sampling grid and LO settings.
    pub fn is_compatible(&self, other: &CurrentTrace) -> bool {
        self.len() == other.len()
            && self.dt == other.dt
            && self.t0 == other.t0
            && self.lo_omega == other.lo_omega
            && self.lo_theta == other.lo_theta
    }
}

/// `i(t_k) = a*(t_k) e^{i(Omega t_k + theta)} + a(t_k) e^{-i(Omega t_k + theta)}`
/// with `t_k = k dt`.
pub fn heterodyne_current(a_out: &[Complex64], dt: f64, omega_lo: f64, theta: f64) -> Result<CurrentTrace> {
    heterodyne_current_at(a_out, dt, 0.0, omega_lo, theta)
}

/// As [`heterodyne_current`] with sample times `t_k = t0 + k dt`.
pub fn heterodyne_current_at(a_out: &[Complex64], dt: f64, t0: f64, omega_lo: f64, theta: f64) -> Result<CurrentTrace> {
    let omega_dt = omega_lo * dt;
    if omega_dt >= PI {
        return Err(Error::AliasedLo { omega_dt });
    }
    let i = a_out
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let phase = omega_lo * (t0 + k as f64 * dt) + theta;
            let (s, c) = phase.sin_cos();
            2.0 * (a.re * c + a.im * s)
        })
        .collect();
    Ok(CurrentTrace { i, dt, t0, lo_omega: omega_lo, lo_theta: theta, seed: 0, realization: 0 })
}

/// Current from a simulated trajectory. Samples are interval averages, so
/// they are time-stamped at the interval centres.
pub fn trajectory_current(traj: &Trajectory, mode: ModeRole, omega_lo: f64, theta: f64) -> Result<CurrentTrace> {
    let a_out = output_field(traj, mode)?;
    let mut trace = heterodyne_current_at(&a_out, traj.dt, 0.5 * traj.dt, omega_lo, theta)?;
    trace.seed = traj.seed;
    trace.realization = traj.realization;
    Ok(trace)
}

pub fn write_current_csv(path: &Path, trace: &CurrentTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t_s,i")?;
    for (k, v) in trace.i.iter().enumerate() {
        writeln!(w, "{:e},{:e}", trace.time(k), v)?;
    }
    w.flush()?;
    Ok(())
}

const CUR_MAGIC: &[u8; 8] = b"RHETCUR\0";
const CUR_VERSION: u32 = 1;

pub fn write_current(path: &Path, trace: &CurrentTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let realization = u32::try_from(trace.realization)
        .map_err(|_| Error::Config(format!("realization {} does not fit the current header", trace.realization)))?;
    HeaderWriter::new(CUR_MAGIC, CUR_VERSION, realization)
        .u64(trace.len() as u64)
        .f64(trace.dt)
        .u64(trace.seed)
        .f64(trace.t0)
        .f64(trace.lo_omega)
        .f64(trace.lo_theta)
        .write(&mut w)?;
    binio::write_real(&mut w, &trace.i)?;
    w.flush()?;
    Ok(())
}

pub fn read_current(path: &Path) -> Result<CurrentTrace> {
    let mut r = BufReader::new(File::open(path)?);
    let mut h = HeaderReader::read(&mut r, CUR_MAGIC)?;
    if h.version != CUR_VERSION {
        return Err(Error::Parse { line: 0, msg: format!("unsupported current version {}", h.version) });
    }
    let n = h.u64() as usize;
    let dt = h.f64();
    let seed = h.u64();
    let realization = u64::from(h.aux);
    let t0 = h.f64();
    let lo_omega = h.f64();
    let lo_theta = h.f64();
    let i = binio::read_real(&mut r, n)?;
    Ok(CurrentTrace { i, dt, t0, lo_omega, lo_theta, seed, realization })
}
