//! Periodogram and filtered-autocorrelation PSD estimators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::filter::{FilterCoeffs, FilterSpec};
use crate::analytic::FrequencyGrid;
use crate::detect::CurrentTrace;
use crate::error::{Error, Result};
use crate::par::{map_range, Exec};

/// Problems up to this many pair products use the direct sum under
/// [`Method::Auto`].
const AUTO_DIRECT_LIMIT: usize = 40_000_000;

/// Which time the filter is evaluated at for a pair `(t_k, t_{k+s})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Unfiltered periodogram.
    None,
    /// Mid-point `t_k + s dt / 2`.
    TBar,
    /// Pair start time `t_k`.
    T0,
}

impl Sampling {
    pub fn name(self) -> &'static str {
        match self {
            Sampling::None => "none",
            Sampling::TBar => "tbar",
            Sampling::T0 => "t0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagWindow {
    #[default]
    Hann,
    Rectangular,
}

impl LagWindow {
    pub fn name(self) -> &'static str {
        match self {
            LagWindow::Hann => "hann",
            LagWindow::Rectangular => "rectangular",
        }
    }

    pub fn weight(self, s: usize, max_lag: usize) -> f64 {
        match self {
            LagWindow::Hann => 0.5 * (1.0 + (PI * s as f64 / max_lag as f64).cos()),
            LagWindow::Rectangular => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Direct sums for small problems or band-limited filters, harmonic
    /// FFTs otherwise.
    #[default]
    Auto,
    /// `O(N L)` pair sums with the exact filter.
    Direct,
    /// Fourier series of the filter truncated at `harmonics`, each harmonic
    /// evaluated by FFT cross-correlation.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    pub max_lag: usize,
    /// Smallest admissible `max_lag` (typically `30 / (Gamma dt)`).
    pub min_lag: usize,
    pub window: LagWindow,
    pub method: Method,
    pub harmonics: usize,
    pub exec: Exec,
}

impl EstimatorOptions {
    pub fn new(max_lag: usize) -> Self {
        Self { max_lag, min_lag: 0, window: LagWindow::Hann, method: Method::Auto, harmonics: 9, exec: Exec::default() }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn window(mut self, window: LagWindow) -> Self {
        self.window = window;
        self
    }

    pub fn exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    Standard { n_segments: usize },
    Filtered { filter: FilterSpec, coeffs: FilterCoeffs, max_lag: usize, window: LagWindow },
}

/// A PSD on a two-sided grid with its ensemble standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub grid: FrequencyGrid,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_realizations: usize,
    pub kind: EstimatorKind,
    pub sampling: Sampling,
    pub lo_omega: f64,
    pub lo_theta: f64,
    /// `(seed, realization)` of every contributing trace.
    pub sources: Vec<(u64, u64)>,
}

impl PsdEstimate {
    pub fn at(&self, omega: f64) -> Option<f64> {
        self.grid.interp(&self.mean, omega)
    }

    /// Divides mean and error by `f`.
    pub fn scaled(mut self, f: f64) -> Self {
        for v in self.mean.iter_mut().chain(self.std_err.iter_mut()) {
            *v /= f;
        }
        self
    }
}

fn two_sided_grid(half: usize, step: f64) -> FrequencyGrid {
    FrequencyGrid::uniform(-(half as f64) * step, step, 2 * half + 1)
}

/// Segment-averaged periodogram `|FFT|^2 dt / M`. The even-length Nyquist
/// bin is dropped so the grid is symmetric.
pub fn psd_standard(trace: &CurrentTrace, n_segments: usize) -> Result<PsdEstimate> {
    psd_standard_with(trace, n_segments, Exec::default())
}

pub fn psd_standard_with(trace: &CurrentTrace, n_segments: usize, exec: Exec) -> Result<PsdEstimate> {
    let n = trace.len();
    if n_segments == 0 || n < 2 * n_segments {
        return Err(Error::TooFewSamples { got: n, needed: 2 * n_segments.max(1) });
    }
    let m = n / n_segments;
    let half = (m - 1) / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let periodograms = map_range(exec, n_segments, |seg| {
        let mut buf: Vec<Complex64> = trace.i[seg * m..(seg + 1) * m].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let scale = trace.dt / m as f64;
        (0..2 * half + 1)
            .map(|j| {
                let idx = (j as isize - half as isize).rem_euclid(m as isize) as usize;
                buf[idx].norm_sqr() * scale
            })
            .collect::<Vec<f64>>()
    });
    let (mean, std_err) = mean_and_se(&periodograms);
    Ok(PsdEstimate {
        grid: two_sided_grid(half, 2.0 * PI / (m as f64 * trace.dt)),
        mean,
        std_err,
        n_realizations: 1,
        kind: EstimatorKind::Standard { n_segments },
        sampling: Sampling::None,
        lo_omega: trace.lo_omega,
        lo_theta: trace.lo_theta,
        sources: vec![(trace.seed, trace.realization)],
    })
}

fn mean_and_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = rows.len() as f64;
    let len = rows[0].len();
    let mut mean = vec![0.0; len];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / r;
        }
    }
    let mut se = vec![0.0; len];
    if rows.len() > 1 {
        for row in rows {
            for ((s, v), m) in se.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        for s in se.iter_mut() {
            *s = (*s / (r - 1.0) / r).sqrt();
        }
    }
    (mean, se)
}

pub fn check_lags(n: usize, opts: &EstimatorOptions) -> Result<()> {
    let limit = n / 4;
    if opts.max_lag > limit {
        return Err(Error::LagTooLong { max_lag: opts.max_lag, limit });
    }
    if opts.max_lag < opts.min_lag.max(1) {
        return Err(Error::LagTooShort { max_lag: opts.max_lag, needed: opts.min_lag.max(1) });
    }
    Ok(())
}

/// Filtered autocorrelation `R_F(s)` for `s = 0..=max_lag` by direct pair
/// sums with the exact filter. The t0 estimator averages the forward
/// (`F(t_k)`) and backward (`F(t_{k+s})`) pair weights, i.e. it returns the
/// even part of the two-sided autocorrelation.
pub fn direct_autocorr(trace: &CurrentTrace, spec: &FilterSpec, sampling: Sampling, max_lag: usize, exec: Exec) -> Vec<f64> {
    let n = trace.len();
    let x = &trace.i;
    let half_dt = 0.5 * trace.dt;
    let f: Vec<f64> = match sampling {
        Sampling::None => Vec::new(),
        _ => (0..2 * n).map(|j| spec.eval(trace.t0 + j as f64 * half_dt)).collect(),
    };
    map_range(exec, max_lag + 1, |s| {
        let pairs = n - s;
        let mut acc = 0.0;
        match sampling {
            Sampling::None => {
                for k in 0..pairs {
                    acc += x[k] * x[k + s];
                }
            }
            Sampling::TBar => {
                for k in 0..pairs {
                    acc += f[2 * k + s] * x[k] * x[k + s];
                }
            }
            Sampling::T0 => {
                for k in 0..pairs {
                    acc += 0.5 * (f[2 * k] + f[2 * (k + s)]) * x[k] * x[k + s];
                }
            }
        }
        acc / pairs as f64
    })
}

/// Harmonic cross-correlations `C_m(s) = sum_k e^{2 i m Omega t_k} i_k i_{k+s}`
/// for `m = 0..=harmonics`, `s = 0..=max_lag`; shared by every filter with the
/// same `Omega`.
#[derive(Debug, Clone)]
pub struct LagCorrelator {
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    pub omega_lo: f64,
    pub max_lag: usize,
    c: Vec<Vec<Complex64>>,
}

impl LagCorrelator {
    pub fn new(trace: &CurrentTrace, omega_lo: f64, max_lag: usize, harmonics: usize, exec: Exec) -> Self {
        let n = trace.len();
        let p = fft_size(n + max_lag + 1);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        let mut xs: Vec<Complex64> = trace.i.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        xs.resize(p, Complex64::new(0.0, 0.0));
        fwd.process(&mut xs);
        let xs = &xs;
        let (fwd, inv) = (&fwd, &inv);
        let c = map_range(exec, harmonics + 1, |m| {
            let w = -2.0 * m as f64 * omega_lo * trace.dt;
            let mut buf: Vec<Complex64> = if m == 0 {
                xs.clone()
            } else {
                let mut b: Vec<Complex64> =
                    trace.i.iter().enumerate().map(|(k, &v)| Complex64::from_polar(v, w * k as f64)).collect();
                b.resize(p, Complex64::new(0.0, 0.0));
                fwd.process(&mut b);
                b
            };
            for (b, x) in buf.iter_mut().zip(xs.iter()) {
                *b = b.conj() * x;
            }
            inv.process(&mut buf);
            let scale = 1.0 / p as f64;
            buf.truncate(max_lag + 1);
            for b in buf.iter_mut() {
                *b *= scale;
            }
            buf
        });
        Self { n, dt: trace.dt, t0: trace.t0, omega_lo, max_lag, c }
    }

    pub fn harmonics(&self) -> usize {
        self.c.len() - 1
    }

    /// `R_F(s)` for the filter's truncated series.
    pub fn autocorr(&self, spec: &FilterSpec, sampling: Sampling) -> Vec<f64> {
        let coeffs = match sampling {
            Sampling::None => vec![Complex64::new(1.0, 0.0)],
            _ => spec.harmonic_coeffs(self.harmonics()),
        };
        let psi = 2.0 * self.omega_lo * self.t0 + spec.phase0;
        let rot: Vec<Complex64> = (0..coeffs.len()).map(|m| Complex64::from_polar(1.0, m as f64 * psi)).collect();
        (0..=self.max_lag)
            .map(|s| {
                let sdt = s as f64 * self.omega_lo * self.dt;
                let mut acc = coeffs[0].re * self.c[0][s].re;
                for (m, cm) in coeffs.iter().enumerate().skip(1) {
                    if cm.norm_sqr() == 0.0 {
                        continue;
                    }
                    let lagged = match sampling {
                        Sampling::T0 => Complex64::from_polar((m as f64 * sdt).cos(), m as f64 * sdt),
                        _ => Complex64::from_polar(1.0, m as f64 * sdt),
                    };
                    acc += 2.0 * (cm * rot[m] * lagged * self.c[m][s]).re;
                }
                acc / (self.n - s) as f64
            })
            .collect()
    }
}

/// Smallest `2^a 3^b 5^c` not below `n`.
pub(crate) fn fft_size(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut m = p35;
            while m < n {
                m *= 2;
            }
            best = best.min(m);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// Windowed transform of an even lag sequence `r[0..=L]`:
/// `P(omega_j) = dt sum_{|s| < L} w(s) r(|s|) e^{-i omega_j s dt}` on the grid
/// `omega_j = j pi / (L dt)`, `|j| < L`.
pub fn lag_psd(r: &[f64], dt: f64, window: LagWindow) -> (FrequencyGrid, Vec<f64>) {
    let l = r.len() - 1;
    let size = 2 * l;
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[0] = Complex64::new(window.weight(0, l) * r[0], 0.0);
    for s in 1..l {
        let v = window.weight(s, l) * r[s];
        buf[s] = Complex64::new(v, 0.0);
        buf[size - s] = Complex64::new(v, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_forward(size).process(&mut buf);
    let half = l - 1;
    let values = (0..2 * half + 1)
        .map(|j| {
            let idx = (j as isize - half as isize).rem_euclid(size as isize) as usize;
            buf[idx].re * dt
        })
        .collect();
    (two_sided_grid(half, PI / (l as f64 * dt)), values)
}

/// Chooses direct or harmonic evaluation for `spec`.
pub fn use_direct(n: usize, spec: &FilterSpec, opts: &EstimatorOptions) -> bool {
    match opts.method {
        Method::Direct => true,
        Method::Harmonic => false,
        Method::Auto => !spec.is_band_limited(opts.harmonics) && n.saturating_mul(opts.max_lag + 1) <= AUTO_DIRECT_LIMIT,
    }
}

/// Filtered autocorrelation by the method selected in `opts`.
pub fn filtered_autocorr(trace: &CurrentTrace, spec: &FilterSpec, sampling: Sampling, opts: &EstimatorOptions) -> Result<Vec<f64>> {
    spec.validate()?;
    check_lags(trace.len(), opts)?;
    if use_direct(trace.len(), spec, opts) {
        Ok(direct_autocorr(trace, spec, sampling, opts.max_lag, opts.exec))
    } else {
        let corr = LagCorrelator::new(trace, spec.omega_lo, opts.max_lag, harmonics_for(spec, sampling, opts), opts.exec);
        Ok(corr.autocorr(spec, sampling))
    }
}

fn harmonics_for(spec: &FilterSpec, sampling: Sampling, opts: &EstimatorOptions) -> usize {
    if sampling == Sampling::None || matches!(spec.kind, super::filter::FilterKind::Constant) {
        0
    } else {
        opts.harmonics
    }
}

/// Builds the estimate record for a filtered lag sequence.
pub fn filtered_estimate(trace: &CurrentTrace, spec: &FilterSpec, sampling: Sampling, r: &[f64], window: LagWindow) -> PsdEstimate {
    let (grid, mean) = lag_psd(r, trace.dt, window);
    let std_err = vec![0.0; mean.len()];
    PsdEstimate {
        grid,
        mean,
        std_err,
        n_realizations: 1,
        kind: EstimatorKind::Filtered {
            filter: spec.clone(),
            coeffs: super::filter::numeric_coeffs(spec),
            max_lag: r.len() - 1,
            window,
        },
        sampling,
        lo_omega: trace.lo_omega,
        lo_theta: trace.lo_theta,
        sources: vec![(trace.seed, trace.realization)],
    }
}

/// Mid-point filtered PSD (r-heterodyne estimator).
pub fn psd_filtered_tbar(trace: &CurrentTrace, spec: &FilterSpec, opts: &EstimatorOptions) -> Result<PsdEstimate> {
    let r = filtered_autocorr(trace, spec, Sampling::TBar, opts)?;
    Ok(filtered_estimate(trace, spec, Sampling::TBar, &r, opts.window))
}

/// Start-time filtered PSD.
pub fn psd_filtered_t0(trace: &CurrentTrace, spec: &FilterSpec, opts: &EstimatorOptions) -> Result<PsdEstimate> {
    let r = filtered_autocorr(trace, spec, Sampling::T0, opts)?;
    Ok(filtered_estimate(trace, spec, Sampling::T0, &r, opts.window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::heterodyne_current;
    use crate::spectra::filter::FilterKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn trace_from(i: Vec<f64>, dt: f64, omega: f64) -> CurrentTrace {
        CurrentTrace { i, dt, t0: 0.5 * dt, lo_omega: omega, lo_theta: 0.0, seed: 0, realization: 0 }
    }

    fn tone(n: usize, dt: f64, omega: f64, theta: f64) -> CurrentTrace {
        let a = vec![Complex64::new(1.0, 0.0); n];
        heterodyne_current(&a, dt, omega, theta).unwrap()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn tone_periodogram_peaks_and_parseval() {
        let (n, dt) = (4096, 1e-3);
        let bin = 205;
        let omega = 2.0 * PI * bin as f64 / (n as f64 * dt);
        let t = tone(n, dt, omega, 0.3);
        let p = psd_standard(&t, 1).unwrap();
        let total: f64 = p.mean.iter().sum();
        let duration = n as f64 * dt;
        assert_relative_eq!(total, 2.0 * duration, max_relative = 1e-6);
        let peak = p.mean.iter().cloned().fold(0.0, f64::max);
        for (j, v) in p.mean.iter().enumerate() {
            let w = p.grid.omega(j);
            if (w.abs() - omega).abs() > 1e-6 * omega {
                assert!(*v < 1e-12 * peak);
            }
        }
    }

    #[test]
    fn white_noise_is_flat() {
        let (n, dt, sigma2): (usize, f64, f64) = (1 << 16, 1e-2, 2.5);
        let x: Vec<f64> = noise(n, 1).iter().map(|v| v * (sigma2 / dt).sqrt()).collect();
        let p = psd_standard(&trace_from(x, dt, 0.0), 64).unwrap();
        let mean = p.mean.iter().sum::<f64>() / p.mean.len() as f64;
        let se = (p.std_err.iter().map(|s| s * s).sum::<f64>() / p.mean.len() as f64).sqrt() / (p.mean.len() as f64).sqrt();
        assert!((mean - sigma2).abs() < 3.0 * se, "{mean} vs {sigma2} (se {se})");
    }

    #[test]
    fn zero_input_gives_zero_psd() {
        let t = trace_from(vec![0.0; 1000], 1e-3, 10.0);
        assert!(psd_standard(&t, 4).unwrap().mean.iter().all(|v| *v == 0.0));
        let f = psd_filtered_tbar(&t, &FilterSpec::toggle(10.0, 0.0), &EstimatorOptions::new(100)).unwrap();
        assert!(f.mean.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn segment_and_lag_errors() {
        let t = trace_from(vec![0.0; 10], 1e-3, 0.0);
        assert!(matches!(psd_standard(&t, 6), Err(Error::TooFewSamples { .. })));
        let spec = FilterSpec::constant();
        assert!(matches!(psd_filtered_tbar(&t, &spec, &EstimatorOptions::new(3)), Err(Error::LagTooLong { .. })));
        let mut o = EstimatorOptions::new(2);
        o.min_lag = 5;
        assert!(matches!(psd_filtered_tbar(&t, &spec, &o), Err(Error::LagTooShort { .. })));
    }

    #[test]
    fn unit_filter_t0_and_tbar_coincide() {
        let t = trace_from(noise(5000, 4), 1e-3, 30.0);
        for method in [Method::Direct, Method::Harmonic] {
            let o = EstimatorOptions::new(400).method(method);
            let a = psd_filtered_tbar(&t, &FilterSpec::constant(), &o).unwrap();
            let b = psd_filtered_t0(&t, &FilterSpec::constant(), &o).unwrap();
            assert_eq!(a.mean, b.mean);
        }
    }

    #[test]
    fn fast_path_matches_direct_sums() {
        let dt = 1e-3;
        let omega = 2.0 * PI * 23.7;
        let mut x = noise(6000, 9);
        for (k, v) in x.iter_mut().enumerate() {
            *v += 2.0 * (omega * k as f64 * dt + 0.4).cos();
        }
        let t = trace_from(x, dt, omega);
        for base in [FilterSpec::toggle(omega, 0.3), FilterSpec::gate(omega, -1.1, 1.0)] {
            let spec = base.truncated(9);
            for sampling in [Sampling::TBar, Sampling::T0] {
                let direct = direct_autocorr(&t, &spec, sampling, 800, Exec::Sequential);
                let corr = LagCorrelator::new(&t, omega, 800, 9, Exec::Parallel);
                let fast = corr.autocorr(&spec, sampling);
                let scale = direct.iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (a, b) in direct.iter().zip(&fast) {
                    assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn tone_toggle_weight_moves_with_sampling() {
        let (n, dt) = (200_000, 1e-3);
        let l = 4000;
        // On a grid bin of the lag transform.
        let omega = 105.0 * PI / (l as f64 * dt);
        for (theta, sign) in [(0.0, 1.0), (PI / 4.0, 0.0), (PI / 2.0, -1.0)] {
            let t = tone(n, dt, omega, theta);
            let spec = FilterSpec::toggle(omega, 0.0);
            let o = EstimatorOptions::new(l).method(Method::Harmonic);
            let tbar = psd_filtered_tbar(&t, &spec, &o).unwrap();
            let amp0 = tbar.at(0.0).unwrap() / (dt * l as f64);
            let expect = 4.0 / PI * (2.0 * theta).cos();
            assert!((amp0 - expect).abs() < 2e-3, "theta {theta}: {amp0} vs {expect}");
            assert!(sign * amp0 >= -2e-3);
            assert!(tbar.at(omega).unwrap().abs() < 1e-2 * dt * l as f64);

            let t0 = psd_filtered_t0(&t, &spec, &o).unwrap();
            let at_zero = t0.at(0.0).unwrap() / (dt * l as f64);
            let at_carrier = t0.at(omega).unwrap() / (dt * l as f64);
            assert!(at_zero.abs() < 2e-3);
            // cos(Omega s) cos(2 theta) concentrates half its weight at each of +/- Omega.
            assert!((at_carrier - 0.5 * expect).abs() < 2e-2, "theta {theta}: {at_carrier}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn estimator_is_linear_in_the_filter(alpha in -2.0..2.0f64, beta in -2.0..2.0f64, phase in -PI..PI) {
            let omega = 2.0 * PI * 31.0;
            let t = trace_from(noise(3000, 17), 1e-3, omega);
            let f1 = FilterSpec::toggle(omega, phase).truncated(7);
            let f2 = FilterSpec::gate(omega, 0.5, 0.8).truncated(7);
            let (c1, c2) = (f1.harmonic_coeffs(7), f2.harmonic_coeffs(7));
            // Absorb each filter's phase offset into its coefficients.
            let absorb = |c: &[Complex64], p: f64| -> Vec<Complex64> {
                c.iter().enumerate().map(|(m, v)| v * Complex64::from_polar(1.0, m as f64 * p)).collect()
            };
            let coeffs = absorb(&c1, phase).iter().zip(absorb(&c2, 0.5)).map(|(a, b)| alpha * a + beta * b).collect();
            let mix = FilterSpec { kind: FilterKind::Harmonic { coeffs }, omega_lo: omega, phase0: 0.0 };
            let o = EstimatorOptions::new(300).method(Method::Direct).exec(Exec::Sequential);
            let r1 = filtered_autocorr(&t, &f1, Sampling::TBar, &o).unwrap();
            let r2 = filtered_autocorr(&t, &f2, Sampling::TBar, &o).unwrap();
            let rm = filtered_autocorr(&t, &mix, Sampling::TBar, &o).unwrap();
            for s in 0..r1.len() {
                let want = alpha * r1[s] + beta * r2[s];
                prop_assert!((rm[s] - want).abs() < 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn negative_lags_mirror_the_midpoint() {
        // R(-s) from the explicit pair set (k, k - s) equals R(s).
        let omega = 2.0 * PI * 9.0;
        let t = trace_from(noise(800, 2), 1e-3, omega);
        let spec = FilterSpec::gate(omega, 0.2, 1.0);
        let r = direct_autocorr(&t, &spec, Sampling::TBar, 50, Exec::Sequential);
        for s in 1..=50usize {
            let n = t.len();
            let mut acc = 0.0;
            for k in s..n {
                let tbar = t.time(k) - 0.5 * s as f64 * t.dt;
                acc += spec.eval(tbar) * t.i[k] * t.i[k - s];
            }
            let neg = acc / (n - s) as f64;
            assert!((neg - r[s]).abs() < 1e-12 * (1.0 + r[s].abs()));
        }
    }

    #[test]
    fn smooth_fft_sizes() {
        assert_eq!(fft_size(1), 1);
        assert_eq!(fft_size(7), 8);
        assert_eq!(fft_size(11), 12);
        assert_eq!(fft_size(1_138_325), 1_152_000);
        for n in [17usize, 1000, 12_345, 999_999] {
            let mut m = fft_size(n);
            assert!(m >= n);
            for f in [2, 3, 5] {
                while m.is_multiple_of(f) {
                    m /= f;
                }
            }
            assert_eq!(m, 1);
        }
    }

    #[test]
    fn lag_psd_of_white_lags_is_flat() {
        let mut r = vec![0.0; 101];
        r[0] = 3.0;
        let (grid, p) = lag_psd(&r, 0.5, LagWindow::Hann);
        assert!(grid.is_symmetric());
        assert_eq!(grid.len(), 199);
        assert_relative_eq!(grid.step(), PI / (100.0 * 0.5), max_relative = 1e-14);
        for v in p {
            assert_relative_eq!(v, 1.5, max_relative = 1e-12);
        }
    }
}
