//! Frequency-domain noise spectra of the detected probe output field and the
//! PSD compositions built from them (homodyne, heterodyne, filtered).
//!
//! Spectra use `S_XY(w) = int ds <X(s) Y(0)> e^{i w s}` with the output field
//! `a_out = sqrt(kappa) a - a_in`. The vacuum shot-noise floor of the
//! heterodyne PSD is 1 (`2 n_p + 1` for a thermal optical bath).

use nalgebra::Matrix6;
use num_complex::Complex64;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};
use crate::model::{self, SystemParams, A1, A1_DAG, STATE_DIM};
use crate::par::{self, Exec};

/// Relative tolerance on imaginary parts discarded from quantities that are real by construction.
pub const IMAG_TOL: f64 = 1e-7;

/// Uniform grid of angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl FrequencyGrid {
    pub fn uniform(start: f64, step: f64, len: usize) -> Self {
        assert!(step > 0.0 && len > 0, "grid needs a positive step and at least one point");
        FrequencyGrid { start, step, len }
    }

    /// Odd-length grid `-n*step ..= n*step` reaching at least `omega_max`.
    pub fn symmetric(omega_max: f64, step: f64) -> Self {
        let n = (omega_max / step).ceil() as usize;
        FrequencyGrid::uniform(-(n as f64) * step, step, 2 * n + 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn first(&self) -> f64 {
        self.start
    }

    pub fn last(&self) -> f64 {
        self.omega(self.len - 1)
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn omegas(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.omega(i))
    }

    pub fn is_symmetric(&self) -> bool {
        (self.first() + self.last()).abs() <= 1e-9 * self.step
    }

    /// Index of the grid point mirrored through zero (symmetric grids only).
    pub fn mirror(&self, i: usize) -> usize {
        self.len - 1 - i
    }

    /// Nearest grid index to `omega`, if inside the grid.
    pub fn nearest(&self, omega: f64) -> Option<usize> {
        let pos = ((omega - self.start) / self.step).round();
        (pos >= 0.0 && pos < self.len as f64).then_some(pos as usize)
    }

    /// Linear interpolation of `values` (one per grid point) at `omega`.
    pub fn interp<T>(&self, values: &[T], omega: f64) -> Option<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        debug_assert_eq!(values.len(), self.len);
        let pos = (omega - self.start) / self.step;
        let eps = 1e-9;
        if pos < -eps || pos > (self.len - 1) as f64 + eps {
            return None;
        }
        let pos = pos.clamp(0.0, (self.len - 1) as f64);
        let i = (pos.floor() as usize).min(self.len.saturating_sub(2));
        if self.len == 1 {
            return Some(values[0]);
        }
        let t = pos - i as f64;
        Some(values[i] * (1.0 - t) + values[i + 1] * t)
    }

    fn sub(&self, lo: usize, hi: usize) -> FrequencyGrid {
        FrequencyGrid::uniform(self.omega(lo), self.step, hi - lo + 1)
    }
}

/// Mechanical resonance used for grid-width checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub omega_m: f64,
    pub gamma: f64,
}

/// The four base spectra of the detected probe output field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    pub grid: FrequencyGrid,
    pub s_a_adag: Vec<f64>,
    pub s_adag_a: Vec<f64>,
    pub s_aa: Vec<Complex64>,
    pub s_adagadag: Vec<Complex64>,
    pub resonance: Option<Resonance>,
    /// True for the Weyl-symmetrized (semiclassical) version.
    pub symmetrized: bool,
}

fn susceptibility(a: &Matrix6<Complex64>, omega: f64) -> Option<Matrix6<Complex64>> {
    let m = Matrix6::<Complex64>::identity() * Complex64::new(0.0, -omega) - a;
    m.try_inverse()
}

fn checked_real(z: Complex64, omega: f64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1e-12) {
        return Err(Error::ComplexResidual { omega, ratio: z.im.abs() / z.re.abs().max(1e-300) });
    }
    Ok(z.re)
}

/// Solves the linear Langevin system in frequency space and assembles
/// `S_{aa+}, S_{a+a}, S_{aa}, S_{a+a+}` for the probe output field.
pub fn base_spectra(params: &SystemParams, grid: &FrequencyGrid) -> Result<SpectrumSet> {
    base_spectra_with(params, grid, Exec::default())
}

pub fn base_spectra_with(params: &SystemParams, grid: &FrequencyGrid, exec: Exec) -> Result<SpectrumSet> {
    let rates = model::derived_rates(params)?;
    let drift = model::drift_matrix(params)?;
    let a = Matrix6::from_fn(|r, c| drift.matrix[(r, c)]);
    let coupling = drift.noise_coupling;
    let sk = params.kappa.sqrt();

    // <xi_i xi_j> weights; only conjugate pairs (i, i ^ 1) are nonzero.
    let mut n = [0.0; STATE_DIM];
    n[0] = params.n_p + 1.0;
    n[1] = params.n_p;
    n[2] = params.n_p + 1.0;
    n[3] = params.n_p;
    n[4] = rates.n_th + 1.0;
    n[5] = rates.n_th;

    let output_row = |chi: &Matrix6<Complex64>, row: usize| -> [Complex64; STATE_DIM] {
        let mut m = [Complex64::new(0.0, 0.0); STATE_DIM];
        for (j, mj) in m.iter_mut().enumerate() {
            *mj = chi[(row, j)] * (sk * coupling[j]);
        }
        m[row] -= 1.0;
        m
    };
    let pair = |x: &[Complex64; STATE_DIM], y: &[Complex64; STATE_DIM]| -> Complex64 {
        (0..STATE_DIM).map(|i| x[i] * y[i ^ 1] * n[i]).sum()
    };

    let points = par::try_map_range(exec, grid.len(), |k| -> Result<[Complex64; 4]> {
        let w = grid.omega(k);
        let singular = Error::UnstableSystem { max_real_part: 0.0 };
        let chi_p = susceptibility(&a, w).ok_or(singular)?;
        let chi_m = susceptibility(&a, -w).ok_or(Error::UnstableSystem { max_real_part: 0.0 })?;
        let (ap, adp) = (output_row(&chi_p, A1), output_row(&chi_p, A1_DAG));
        let (am, adm) = (output_row(&chi_m, A1), output_row(&chi_m, A1_DAG));
        Ok([pair(&ap, &adm), pair(&adp, &am), pair(&ap, &am), pair(&adp, &adm)])
    })?;

    let mut set = SpectrumSet {
        grid: grid.clone(),
        s_a_adag: Vec::with_capacity(grid.len()),
        s_adag_a: Vec::with_capacity(grid.len()),
        s_aa: Vec::with_capacity(grid.len()),
        s_adagadag: Vec::with_capacity(grid.len()),
        resonance: Some(Resonance { omega_m: params.omega_m, gamma: rates.gamma_total }),
        symmetrized: false,
    };
    for (k, [aad, ada, aa, adad]) in points.into_iter().enumerate() {
        let w = grid.omega(k);
        set.s_a_adag.push(checked_real(aad, w)?);
        set.s_adag_a.push(checked_real(ada, w)?);
        set.s_aa.push(aa);
        set.s_adagadag.push(adad);
    }
    Ok(set)
}

impl SpectrumSet {
    /// Weyl-symmetrized spectra, i.e. what a semiclassical simulation with
    /// `n + 1/2` noise reproduces: `S_{aa+} -> (S_{aa+}(w) + S_{a+a}(-w)) / 2` etc.
    pub fn symmetrized(&self) -> Result<SpectrumSet> {
        if !self.grid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let g = &self.grid;
        let m = |i| g.mirror(i);
        let n = g.len();
        Ok(SpectrumSet {
            grid: g.clone(),
            s_a_adag: (0..n).map(|i| 0.5 * (self.s_a_adag[i] + self.s_adag_a[m(i)])).collect(),
            s_adag_a: (0..n).map(|i| 0.5 * (self.s_adag_a[i] + self.s_a_adag[m(i)])).collect(),
            s_aa: (0..n).map(|i| 0.5 * (self.s_aa[i] + self.s_aa[m(i)])).collect(),
            s_adagadag: (0..n).map(|i| 0.5 * (self.s_adagadag[i] + self.s_adagadag[m(i)])).collect(),
            resonance: self.resonance,
            symmetrized: true,
        })
    }

    /// Coherence term `e^{-2i theta} S_aa(w) + e^{2i theta} S_{a+a+}(w)` at grid index `i`.
    fn coherence(&self, i: usize, theta: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, -2.0 * theta);
        rot * self.s_aa[i] + rot.conj() * self.s_adagadag[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdKind {
    Homodyne,
    Heterodyne,
    Het0,
    Rheterodyne,
    RheterodyneT0,
    /// Single-sided symmetrized version of another kind.
    Symmetrized,
}

impl PsdKind {
    pub fn name(self) -> &'static str {
        match self {
            PsdKind::Homodyne => "homodyne",
            PsdKind::Heterodyne => "heterodyne",
            PsdKind::Het0 => "het0",
            PsdKind::Rheterodyne => "rheterodyne",
            PsdKind::RheterodyneT0 => "rheterodyne_t0",
            PsdKind::Symmetrized => "symmetrized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsdMeta {
    pub omega_lo: Option<f64>,
    pub theta: Option<f64>,
    pub f0: Option<f64>,
    pub f2: Option<f64>,
}

/// A real power spectral density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub kind: PsdKind,
    pub meta: PsdMeta,
}

impl Psd {
    pub fn at(&self, omega: f64) -> Option<f64> {
        self.grid.interp(&self.values, omega)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `S_hom = S_{a+a} + S_{aa+} + e^{-2i theta} S_aa + e^{2i theta} S_{a+a+}`.
pub fn homodyne_psd(s: &SpectrumSet, theta: f64) -> Result<Psd> {
    if !s.grid.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let values = (0..s.grid.len())
        .map(|i| {
            let coh = checked_real(s.coherence(i, theta), s.grid.omega(i))?;
            Ok(s.s_adag_a[i] + s.s_a_adag[i] + coh)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Psd {
        grid: s.grid.clone(),
        values,
        kind: PsdKind::Homodyne,
        meta: PsdMeta { omega_lo: Some(0.0), theta: Some(theta), ..Default::default() },
    })
}

/// Output sub-grid on which both `w + Omega` and `w - Omega` stay inside the grid.
fn shifted_subgrid(s: &SpectrumSet, omega_lo: f64) -> Result<(usize, usize)> {
    let g = &s.grid;
    let reach = g.last().min(-g.first()) - omega_lo;
    if let Some(res) = s.resonance {
        let needed = omega_lo + res.omega_m + 10.0 * res.gamma;
        if reach < needed {
            return Err(Error::GridTooNarrow { needed: needed + omega_lo, available: g.last() });
        }
    }
    let tol = 1e-9 * g.step();
    let lo = (0..g.len()).find(|&i| g.omega(i) - omega_lo >= g.first() - tol);
    let hi = (0..g.len()).rev().find(|&i| g.omega(i) + omega_lo <= g.last() + tol);
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo <= hi => Ok((lo, hi)),
        _ => Err(Error::GridTooNarrow { needed: 2.0 * omega_lo, available: g.last() }),
    }
}

fn heterodyne_values(s: &SpectrumSet, omega_lo: f64, lo: usize, hi: usize) -> Vec<f64> {
    let g = &s.grid;
    (lo..=hi)
        .map(|i| {
            let w = g.omega(i);
            let up = g.interp(&s.s_a_adag, w + omega_lo).unwrap_or(0.0);
            let down = g.interp(&s.s_adag_a, w - omega_lo).unwrap_or(0.0);
            up + down
        })
        .collect()
}

/// `S_het(w) = S_{aa+}(w + Omega) + S_{a+a}(w - Omega)`; `Omega = 0` gives the
/// merged-sideband spectrum without coherences.
pub fn heterodyne_psd(s: &SpectrumSet, omega_lo: f64) -> Result<Psd> {
    let (lo, hi) = shifted_subgrid(s, omega_lo)?;
    Ok(Psd {
        grid: s.grid.sub(lo, hi),
        values: heterodyne_values(s, omega_lo, lo, hi),
        kind: if omega_lo == 0.0 { PsdKind::Het0 } else { PsdKind::Heterodyne },
        meta: PsdMeta { omega_lo: Some(omega_lo), ..Default::default() },
    })
}

pub fn het0_psd(s: &SpectrumSet) -> Result<Psd> {
    heterodyne_psd(s, 0.0)
}

/// Filtered composite `f0 S_het + f2 (e^{-2i theta} S_aa + e^{2i theta} S_{a+a+})`.
pub fn rheterodyne_psd(s: &SpectrumSet, omega_lo: f64, theta: f64, f0: f64, f2: f64) -> Result<Psd> {
    let (lo, hi) = shifted_subgrid(s, omega_lo)?;
    let het = heterodyne_values(s, omega_lo, lo, hi);
    let values = (lo..=hi)
        .zip(het)
        .map(|(i, h)| {
            let coh = checked_real(s.coherence(i, theta), s.grid.omega(i))?;
            Ok(f0 * h + f2 * coh)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Psd {
        grid: s.grid.sub(lo, hi),
        values,
        kind: PsdKind::Rheterodyne,
        meta: PsdMeta { omega_lo: Some(omega_lo), theta: Some(theta), f0: Some(f0), f2: Some(f2) },
    })
}

/// Start-time-sampled composite: coherences move to `S_aa(w - Omega)` and
/// `S_{a+a+}(w + Omega)`. The shifted pair is not conjugate-symmetric, so the
/// real part is reported.
pub fn rheterodyne_t0_psd(s: &SpectrumSet, omega_lo: f64, theta: f64, f0: f64, f2: f64) -> Result<Psd> {
    let (lo, hi) = shifted_subgrid(s, omega_lo)?;
    let het = heterodyne_values(s, omega_lo, lo, hi);
    let g = &s.grid;
    let rot = Complex64::from_polar(1.0, -2.0 * theta);
    let values = (lo..=hi)
        .zip(het)
        .map(|(i, h)| {
            let w = g.omega(i);
            let aa = g.interp(&s.s_aa, w - omega_lo).unwrap_or_default();
            let adad = g.interp(&s.s_adagadag, w + omega_lo).unwrap_or_default();
            f0 * h + f2 * (rot * aa + rot.conj() * adad).re
        })
        .collect();
    Ok(Psd {
        grid: g.sub(lo, hi),
        values,
        kind: PsdKind::RheterodyneT0,
        meta: PsdMeta { omega_lo: Some(omega_lo), theta: Some(theta), f0: Some(f0), f2: Some(f2) },
    })
}

/// Single-sided symmetrized PSD `(S(w) + S(-w)) / 2` on `w >= 0`.
pub fn symmetrize(p: &Psd) -> Result<Psd> {
    let g = &p.grid;
    if !g.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let zero = g.len() / 2;
    let values = (zero..g.len()).map(|i| 0.5 * (p.values[i] + p.values[g.mirror(i)])).collect();
    Ok(Psd {
        grid: FrequencyGrid::uniform(g.omega(zero), g.step(), g.len() - zero),
        values,
        kind: PsdKind::Symmetrized,
        meta: p.meta,
    })
}

/// Sideband measured against a locally fitted flat floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandFit {
    /// Area above the floor: window trapezoid plus the Lorentzian tails outside it.
    pub area: f64,
    pub peak_height: f64,
    /// Lorentzian full width at half maximum.
    pub fitted_width: f64,
    pub center: f64,
    pub floor: f64,
}

/// Measures the peak inside `center +/- halfwidth`.
pub fn sideband_areas(p: &Psd, center: f64, halfwidth: f64) -> Result<SidebandFit> {
    let g = &p.grid;
    let (lo_w, hi_w) = (center - halfwidth, center + halfwidth);
    let tol = 1e-9 * g.step();
    if lo_w < g.first() - tol || hi_w > g.last() + tol || halfwidth <= 0.0 {
        return Err(Error::WindowOutsideGrid { lo: lo_w, hi: hi_w });
    }
    let lo = ((lo_w - g.first()) / g.step()).ceil().max(0.0) as usize;
    let hi = (((hi_w - g.first()) / g.step()).floor() as usize).min(g.len() - 1);
    if hi < lo + 4 {
        return Err(Error::WindowOutsideGrid { lo: lo_w, hi: hi_w });
    }
    let w: Vec<f64> = (lo..=hi).map(|i| g.omega(i)).collect();
    let v = &p.values[lo..=hi];
    let n = v.len();
    let edge = (n / 10).max(2);
    let edges: Vec<usize> = (0..edge).chain(n - edge..n).collect();
    let edge_mean = |f: &dyn Fn(usize) -> f64| edges.iter().map(|&k| f(k)).sum::<f64>() / edges.len() as f64;

    let mut floor = edge_mean(&|k| v[k]);
    let (mut height, mut c, mut width) = (0.0, center, 0.0);
    for _ in 0..8 {
        let (k_peak, peak) = v
            .iter()
            .enumerate()
            .map(|(k, &x)| (k, x - floor))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if peak <= 0.0 {
            return Ok(SidebandFit { area: 0.0, peak_height: 0.0, fitted_width: 0.0, center, floor });
        }
        height = peak;
        c = w[k_peak];
        if k_peak > 0 && k_peak + 1 < n {
            let (ym, y0, yp) = (v[k_peak - 1], v[k_peak], v[k_peak + 1]);
            let denom = ym - 2.0 * y0 + yp;
            if denom < 0.0 {
                let shift = 0.5 * (ym - yp) / denom;
                c += shift * g.step();
                height = y0 - floor - 0.25 * (ym - yp) * shift;
            }
        }
        let half = floor + 0.5 * height;
        let cross = |range: &mut dyn Iterator<Item = usize>, dir: isize| -> Option<f64> {
            for k in range {
                let j = (k as isize + dir) as usize;
                if v[k] >= half && v[j] < half {
                    let t = (v[k] - half) / (v[k] - v[j]);
                    return Some(w[k] + t * (w[j] - w[k]));
                }
            }
            None
        };
        let left = cross(&mut (1..=k_peak).rev(), -1);
        let right = cross(&mut (k_peak..n - 1), 1);
        width = match (left, right) {
            (Some(l), Some(r)) => r - l,
            (Some(l), None) => 2.0 * (c - l),
            (None, Some(r)) => 2.0 * (r - c),
            (None, None) => 2.0 * halfwidth,
        };
        let (hgt, cc, wd) = (height, c, width);
        let lorentz = move |x: f64| hgt / (1.0 + (2.0 * (x - cc) / wd).powi(2));
        floor = edge_mean(&|k| v[k] - lorentz(w[k]));
    }

    let trap: f64 = (0..n - 1).map(|k| 0.5 * (v[k] + v[k + 1] - 2.0 * floor) * (w[k + 1] - w[k])).sum();
    let hw = 0.5 * width;
    let tail = height * hw * (std::f64::consts::PI - ((w[n - 1] - c) / hw).atan() - ((c - w[0]) / hw).atan());
    Ok(SidebandFit { area: trap + tail, peak_height: height, fitted_width: width, center: c, floor })
}
