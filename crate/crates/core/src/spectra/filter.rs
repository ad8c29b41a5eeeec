//! Periodic mid-point filters `F(t) = F(2 Omega t + phi0)` and their
//! Fourier series.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_GATE_HALFWIDTH: f64 = PI / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterKind {
    /// `F = 1`.
    Constant,
    /// `+1` on the half period where `cos x >= 0`, `-1` elsewhere.
    Toggle,
    /// `1` for `|x| <= halfwidth`, `0` elsewhere.
    Gate { halfwidth: f64 },
    /// Piecewise-constant table over equal bins of `x` in `[-pi, pi)`.
    Custom { table: Vec<f64> },
    /// Truncated Fourier series: `F = c0 + sum_m 2 Re(c_m e^{imx})`,
    /// with `coeffs[m] = c_m`.
    Harmonic { coeffs: Vec<Complex64> },
}

/// A filter evaluated at phase `x = 2 Omega t + phi0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub omega_lo: f64,
    pub phase0: f64,
}

/// `(F(0), F(2 Omega))`: the period average and the first harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoeffs {
    pub f0: f64,
    pub f2: f64,
}

impl FilterSpec {
    pub fn constant() -> Self {
        Self { kind: FilterKind::Constant, omega_lo: 0.0, phase0: 0.0 }
    }

    pub fn toggle(omega_lo: f64, phase0: f64) -> Self {
        Self { kind: FilterKind::Toggle, omega_lo, phase0 }
    }

    pub fn gate(omega_lo: f64, phase0: f64, halfwidth: f64) -> Self {
        Self { kind: FilterKind::Gate { halfwidth }, omega_lo, phase0 }
    }

    pub fn with_phase(&self, phase0: f64) -> Self {
        Self { phase0, ..self.clone() }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FilterKind::Constant => "constant",
            FilterKind::Toggle => "toggle",
            FilterKind::Gate { .. } => "gate",
            FilterKind::Custom { .. } => "custom",
            FilterKind::Harmonic { .. } => "harmonic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_lo.is_finite() || !self.phase0.is_finite() {
            return Err(Error::Config("filter frequency and phase must be finite".into()));
        }
        match &self.kind {
            FilterKind::Gate { halfwidth } if !(*halfwidth > 0.0 && *halfwidth <= PI) => {
                Err(Error::Config(format!("gate halfwidth {halfwidth} outside (0, pi]")))
            }
            FilterKind::Custom { table } if table.is_empty() => Err(Error::Config("empty custom filter table".into())),
            FilterKind::Harmonic { coeffs } if coeffs.is_empty() => Err(Error::Config("empty harmonic filter".into())),
            _ => Ok(()),
        }
    }

    /// Value at absolute time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_phase(2.0 * self.omega_lo * t + self.phase0)
    }

    /// Value at filter phase `x`.
    pub fn eval_phase(&self, x: f64) -> f64 {
        match &self.kind {
            FilterKind::Constant => 1.0,
            FilterKind::Toggle => {
                if x.cos() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            FilterKind::Gate { halfwidth } => {
                if wrap(x).abs() <= *halfwidth {
                    1.0
                } else {
                    0.0
                }
            }
            FilterKind::Custom { table } => {
                let n = table.len();
                let u = (wrap(x) + PI) / (2.0 * PI);
                table[((u * n as f64) as usize).min(n - 1)]
            }
            FilterKind::Harmonic { coeffs } => {
                let mut v = coeffs[0].re;
                for (m, c) in coeffs.iter().enumerate().skip(1) {
                    v += 2.0 * (c * Complex64::from_polar(1.0, m as f64 * x)).re;
                }
                v
            }
        }
    }

    /// Fourier coefficients `c_0..=c_max` of `F(x) = sum_m c_m e^{imx}`
    /// (`c_{-m} = conj(c_m)`).
    pub fn harmonic_coeffs(&self, max: usize) -> Vec<Complex64> {
        let re = |v: f64| Complex64::new(v, 0.0);
        (0..=max)
            .map(|m| {
                let mf = m as f64;
                match &self.kind {
                    FilterKind::Constant => re(if m == 0 { 1.0 } else { 0.0 }),
                    FilterKind::Toggle => {
                        if m % 2 == 1 {
                            re(2.0 * (mf * PI / 2.0).sin() / (PI * mf))
                        } else {
                            re(0.0)
                        }
                    }
                    FilterKind::Gate { halfwidth } => {
                        if m == 0 {
                            re(halfwidth / PI)
                        } else {
                            re((mf * halfwidth).sin() / (mf * PI))
                        }
                    }
                    FilterKind::Custom { table } => custom_coeff(table, m),
                    FilterKind::Harmonic { coeffs } => coeffs.get(m).copied().unwrap_or_default(),
                }
            })
            .collect()
    }

    /// Whether the series from [`FilterSpec::harmonic_coeffs`] with `max`
    /// terms reproduces the filter exactly.
    pub fn is_band_limited(&self, max: usize) -> bool {
        match &self.kind {
            FilterKind::Constant => true,
            FilterKind::Harmonic { coeffs } => coeffs.len() <= max + 1,
            _ => false,
        }
    }

    /// The truncated-series filter with harmonics up to `max`.
    pub fn truncated(&self, max: usize) -> FilterSpec {
        FilterSpec { kind: FilterKind::Harmonic { coeffs: self.harmonic_coeffs(max) }, ..self.clone() }
    }
}

/// Wraps to `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn custom_coeff(table: &[f64], m: usize) -> Complex64 {
    let n = table.len() as f64;
    let w = 2.0 * PI / n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, v) in table.iter().enumerate() {
        let lo = -PI + b as f64 * w;
        let hi = lo + w;
        let integral = if m == 0 {
            Complex64::new(w, 0.0)
        } else {
            let mf = m as f64;
            let i = Complex64::i();
            (Complex64::from_polar(1.0, -mf * hi) - Complex64::from_polar(1.0, -mf * lo)) / (-i * mf)
        };
        acc += v * integral;
    }
    acc / (2.0 * PI)
}

/// Closed-form `(F(0), F(2 Omega))` for the periodic kinds.
pub fn filter_ft_coeffs(spec: &FilterSpec) -> Result<FilterCoeffs> {
    match spec.kind {
        FilterKind::Constant => Ok(FilterCoeffs { f0: 1.0, f2: 0.0 }),
        FilterKind::Toggle => Ok(FilterCoeffs { f0: 0.0, f2: 2.0 / PI }),
        FilterKind::Gate { halfwidth } => Ok(FilterCoeffs { f0: halfwidth / PI, f2: halfwidth.sin() / PI }),
        FilterKind::Custom { .. } | FilterKind::Harmonic { .. } => Err(Error::NonPeriodicFilter),
    }
}

/// Coefficients of any kind from its Fourier series; the real part of the
/// first harmonic is reported as `f2`.
pub fn numeric_coeffs(spec: &FilterSpec) -> FilterCoeffs {
    let c = spec.harmonic_coeffs(1);
    FilterCoeffs { f0: c[0].re, f2: c[1].re }
}
