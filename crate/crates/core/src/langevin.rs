//! Time-domain stochastic simulation of the linearized dynamics.
//!
//! The state is integrated in the real quadrature basis `(u1, v1, u2, v2, q, p)`
//! with symmetric-ordered Gaussian noise of intensity `(n + 1/2) / 2` per
//! quadrature. The default scheme is the exact discrete map of the linear SDE:
//! the state is augmented with its interval average and with the normalized
//! Wiener increment of each bath, and the joint one-step covariance is obtained
//! from a single block matrix exponential. Recorded samples are interval
//! averages over `[t_k, t_k + dt)`, so `sqrt(kappa) a - a_in` is an exact
//! integrate-and-dump output sample built from the very noise that drove the
//! cavity.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::binio::{self, HeaderReader, HeaderWriter};
use crate::error::{Error, Result};
use crate::model::{drift_matrix, lyapunov, ModeRole, SystemParams, STATE_DIM};

const AUG: usize = 3 * STATE_DIM;
pub const MAX_DT_OMEGA: f64 = 0.1;
/// Minimum record length in units of `1 / Gamma`.
pub const MIN_DURATION_GAMMA: f64 = 50.0;
/// Default burn-in in units of `1 / Gamma`.
pub const BURN_IN_GAMMA: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Exact,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialState {
    /// Draw from the stationary covariance.
    #[default]
    Stationary,
    Zero,
    /// Deterministic start at the given amplitudes.
    Coherent { a1: Complex64, a2: Complex64, b: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub n_samples: usize,
    pub n_realizations: usize,
    pub seed: u64,
    pub record_inputs: bool,
    /// Steps integrated and discarded before recording.
    pub burn_in: usize,
    pub scheme: Scheme,
    pub initial: InitialState,
    /// Include the vacuum half quantum in every bath.
    pub zero_point: bool,
}

impl SimConfig {
    pub fn new(dt: f64, n_samples: usize, n_realizations: usize, seed: u64) -> Self {
        Self {
            dt,
            n_samples,
            n_realizations,
            seed,
            record_inputs: true,
            burn_in: 0,
            scheme: Scheme::Exact,
            initial: InitialState::Stationary,
            zero_point: true,
        }
    }

    /// Largest admissible step and a burn-in of `20 / Gamma`.
    pub fn for_params(params: &SystemParams, gamma_total: f64, n_samples: usize, n_realizations: usize, seed: u64) -> Self {
        let dt = MAX_DT_OMEGA / params.omega_m;
        let mut cfg = Self::new(dt, n_samples, n_realizations, seed);
        cfg.burn_in = burn_in_steps(gamma_total, dt);
        cfg
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 * self.dt
    }

    pub fn check_step(&self, params: &SystemParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSimConfig("dt must be positive".into()));
        }
        if self.n_samples == 0 || self.n_realizations == 0 {
            return Err(Error::InvalidSimConfig("n_samples and n_realizations must be positive".into()));
        }
        let dt_omega = self.dt * params.omega_m;
        if dt_omega > MAX_DT_OMEGA * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt_omega });
        }
        Ok(())
    }

    /// Step check plus the record-length requirement `N dt >= 50 / Gamma`.
    pub fn validate(&self, params: &SystemParams, gamma_total: f64) -> Result<()> {
        self.check_step(params)?;
        let need = MIN_DURATION_GAMMA / gamma_total;
        if self.duration() < need * (1.0 - 1e-12) {
            return Err(Error::InvalidSimConfig(format!(
                "record length {:.4e} s is shorter than 50/Gamma = {:.4e} s",
                self.duration(),
                need
            )));
        }
        Ok(())
    }
}

pub fn burn_in_steps(gamma_total: f64, dt: f64) -> usize {
    (BURN_IN_GAMMA / (gamma_total * dt)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputNoise {
    pub a1_in: Vec<Complex64>,
    pub a2_in: Vec<Complex64>,
    pub b_in: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub inputs: Option<InputNoise>,
    pub dt: f64,
    pub seed: u64,
    pub realization: u64,
    pub kappa: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.a1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a1.is_empty()
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dt = self.dt;
        (0..self.len()).map(move |k| k as f64 * dt)
    }
}

/// Per-realization RNG: one ChaCha stream per realization index.
pub fn realization_rng(seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// Precomputed one-step map, shareable across realizations.
#[derive(Debug, Clone)]
pub struct Integrator {
    cfg: SimConfig,
    kappa: f64,
    /// Deterministic part: rows are `(X', Xbar, Z)`, columns `X`.
    phi: [[f64; STATE_DIM]; AUG],
    /// Noise factor with `L L^T` equal to the one-step covariance.
    chol: [[f64; AUG]; AUG],
    lower: bool,
    /// Scale from normalized Wiener increment to the mean input noise.
    in_scale: [f64; STATE_DIM],
    init_factor: [[f64; STATE_DIM]; STATE_DIM],
}

impl Integrator {
    pub fn new(params: &SystemParams, cfg: &SimConfig) -> Result<Self> {
        cfg.check_step(params)?;
        let drift = drift_matrix(params)?;
        let max_re = drift.max_real_part();
        if max_re >= 0.0 {
            return Err(Error::UnstableSystem { max_real_part: max_re });
        }
        let a = drift.to_real();
        let dt = cfg.dt;
        let zp = if cfg.zero_point { 0.5 } else { 0.0 };
        let occ = [params.n_p, params.n_p, params.n_p, params.n_p, params.n_th(), params.n_th()];
        let mut k = [0.0; STATE_DIM];
        let mut in_scale = [0.0; STATE_DIM];
        for r in 0..STATE_DIM {
            let d = 0.5 * (occ[r] + zp);
            k[r] = drift.noise_coupling[r] * d.sqrt();
            in_scale[r] = (d / dt).sqrt();
        }

        let (phi_m, q) = match cfg.scheme {
            Scheme::Exact => exact_map(&a, &k, dt),
            Scheme::EulerMaruyama => euler_map(&a, &k, dt),
        };
        let (l, lower) = factor(&q);

        let mut phi = [[0.0; STATE_DIM]; AUG];
        let mut chol = [[0.0; AUG]; AUG];
        for r in 0..AUG {
            for c in 0..STATE_DIM {
                phi[r][c] = phi_m[(r, c)];
            }
            for c in 0..AUG {
                chol[r][c] = l[(r, c)];
            }
        }

        let mut init_factor = [[0.0; STATE_DIM]; STATE_DIM];
        if cfg.initial == InitialState::Stationary {
            let kk = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(STATE_DIM, k.iter().map(|v| v * v)));
            let sigma = lyapunov(&a, &kk)?;
            let (f, _) = factor(&sigma);
            for r in 0..STATE_DIM {
                for c in 0..STATE_DIM {
                    init_factor[r][c] = f[(r, c)];
                }
            }
        }

        Ok(Self { cfg: cfg.clone(), kappa: params.kappa, phi, chol, lower, in_scale, init_factor })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn run(&self, realization: u64) -> Trajectory {
        let cfg = &self.cfg;
        let n = cfg.n_samples;
        let mut rng = realization_rng(cfg.seed, realization);
        let mut x = [0.0; STATE_DIM];
        match cfg.initial {
            InitialState::Zero => {}
            InitialState::Coherent { a1, a2, b } => {
                x = [a1.re, a1.im, a2.re, a2.im, b.re, b.im];
            }
            InitialState::Stationary => {
                let mut e = [0.0; STATE_DIM];
                for v in e.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                for (r, xr) in x.iter_mut().enumerate() {
                    *xr = (0..STATE_DIM).map(|c| self.init_factor[r][c] * e[c]).sum();
                }
            }
        }

        let mut z = [0.0; AUG];
        for _ in 0..cfg.burn_in {
            self.step(&mut rng, &mut x, &mut z);
        }

        let mut a1 = Vec::with_capacity(n);
        let mut a2 = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut inputs = cfg.record_inputs.then(|| InputNoise {
            a1_in: Vec::with_capacity(n),
            a2_in: Vec::with_capacity(n),
            b_in: Vec::with_capacity(n),
        });
        let s = &self.in_scale;
        for _ in 0..n {
            self.step(&mut rng, &mut x, &mut z);
            let m = &z[STATE_DIM..2 * STATE_DIM];
            a1.push(Complex64::new(m[0], m[1]));
            a2.push(Complex64::new(m[2], m[3]));
            b.push(Complex64::new(m[4], m[5]));
            if let Some(inp) = inputs.as_mut() {
                let w = &z[2 * STATE_DIM..];
                inp.a1_in.push(Complex64::new(s[0] * w[0], s[1] * w[1]));
                inp.a2_in.push(Complex64::new(s[2] * w[2], s[3] * w[3]));
                inp.b_in.push(Complex64::new(s[4] * w[4], s[5] * w[5]));
            }
        }
        Trajectory { a1, a2, b, inputs, dt: cfg.dt, seed: cfg.seed, realization, kappa: self.kappa }
    }

    #[inline]
    fn step(&self, rng: &mut ChaCha8Rng, x: &mut [f64; STATE_DIM], z: &mut [f64; AUG]) {
        let mut e = [0.0; AUG];
        for v in e.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for r in 0..AUG {
            let pr = &self.phi[r];
            let mut acc = 0.0;
            for c in 0..STATE_DIM {
                acc += pr[c] * x[c];
            }
            let lr = &self.chol[r];
            let hi = if self.lower { r + 1 } else { AUG };
            for c in 0..hi {
                acc += lr[c] * e[c];
            }
            z[r] = acc;
        }
        x.copy_from_slice(&z[..STATE_DIM]);
    }
}

/// Exact discretization via the Van Loan block exponential on the augmented
/// system `(X, Xbar = int X / dt, Z = W / sqrt(dt))`.
fn exact_map(a: &DMatrix<f64>, k: &[f64; STATE_DIM], dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = STATE_DIM;
    let mut at = DMatrix::<f64>::zeros(AUG, AUG);
    at.view_mut((0, 0), (n, n)).copy_from(a);
    for r in 0..n {
        at[(n + r, r)] = 1.0 / dt;
    }
    let mut bn = DMatrix::<f64>::zeros(AUG, n);
    for r in 0..n {
        bn[(r, r)] = k[r];
        bn[(2 * n + r, r)] = 1.0 / dt.sqrt();
    }
    let bb = &bn * bn.transpose();

    let mut m = DMatrix::<f64>::zeros(2 * AUG, 2 * AUG);
    m.view_mut((0, 0), (AUG, AUG)).copy_from(&(-&at * dt));
    m.view_mut((0, AUG), (AUG, AUG)).copy_from(&(&bb * dt));
    m.view_mut((AUG, AUG), (AUG, AUG)).copy_from(&(at.transpose() * dt));
    let e = m.exp();
    let phi = e.view((AUG, AUG), (AUG, AUG)).transpose();
    let q = &phi * e.view((0, AUG), (AUG, AUG));
    let q = (&q + q.transpose()) * 0.5;
    (phi.columns(0, n).into_owned(), q)
}

fn euler_map(a: &DMatrix<f64>, k: &[f64; STATE_DIM], dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = STATE_DIM;
    let mut phi = DMatrix::<f64>::zeros(AUG, n);
    phi.view_mut((0, 0), (n, n)).copy_from(&(DMatrix::identity(n, n) + a * dt));
    for r in 0..n {
        phi[(n + r, r)] = 1.0;
    }
    let mut bn = DMatrix::<f64>::zeros(AUG, n);
    for r in 0..n {
        bn[(r, r)] = k[r] * dt.sqrt();
        bn[(2 * n + r, r)] = 1.0;
    }
    let q = &bn * bn.transpose();
    (phi, q)
}

/// A factor `L` with `L L^T = q`: Cholesky when positive definite, otherwise
/// the symmetric square root with negative rounding clipped.
fn factor(q: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if let Some(c) = q.clone().cholesky() {
        return (c.l(), true);
    }
    let eig = q.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    (&eig.eigenvectors * DMatrix::from_diagonal(&d), false)
}

/// Simulates realization 0 of `cfg`.
pub fn simulate(params: &SystemParams, cfg: &SimConfig) -> Result<Trajectory> {
    Ok(Integrator::new(params, cfg)?.run(0))
}

pub fn simulate_realization(params: &SystemParams, cfg: &SimConfig, realization: u64) -> Result<Trajectory> {
    Ok(Integrator::new(params, cfg)?.run(realization))
}

/// `sqrt(kappa) a - a_in` for the selected optical mode.
pub fn output_field(traj: &Trajectory, mode: ModeRole) -> Result<Vec<Complex64>> {
    let inputs = traj.inputs.as_ref().ok_or(Error::MissingInputs)?;
    let (a, a_in) = match mode {
        ModeRole::Probe => (&traj.a1, &inputs.a1_in),
        ModeRole::Damper => (&traj.a2, &inputs.a2_in),
    };
    let sk = traj.kappa.sqrt();
    Ok(a.iter().zip(a_in).map(|(x, n)| sk * x - n).collect())
}

const TRAJ_MAGIC: &[u8; 8] = b"RHETTRJ\0";
const TRAJ_VERSION: u32 = 1;

/// Writes the binary dump: 64-byte header then `a1, a2, b` and, when
/// recorded, `a1_in, a2_in, b_in`, each as interleaved `(re, im)` doubles.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let flags = u32::from(traj.inputs.is_some());
    HeaderWriter::new(TRAJ_MAGIC, TRAJ_VERSION, flags)
        .u64(traj.len() as u64)
        .f64(traj.dt)
        .u64(traj.seed)
        .u64(traj.realization)
        .f64(traj.kappa)
        .write(&mut w)?;
    for f in [&traj.a1, &traj.a2, &traj.b] {
        binio::write_complex(&mut w, f)?;
    }
    if let Some(inp) = &traj.inputs {
        for f in [&inp.a1_in, &inp.a2_in, &inp.b_in] {
            binio::write_complex(&mut w, f)?;
        }
    }
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut r = BufReader::new(File::open(path)?);
    let mut h = HeaderReader::read(&mut r, TRAJ_MAGIC)?;
    if h.version != TRAJ_VERSION {
        return Err(Error::Parse { line: 0, msg: format!("unsupported trajectory version {}", h.version) });
    }
    let n = h.u64() as usize;
    let dt = h.f64();
    let seed = h.u64();
    let realization = h.u64();
    let kappa = h.f64();
    let a1 = binio::read_complex(&mut r, n)?;
    let a2 = binio::read_complex(&mut r, n)?;
    let b = binio::read_complex(&mut r, n)?;
    let inputs = if h.aux & 1 == 1 {
        Some(InputNoise {
            a1_in: binio::read_complex(&mut r, n)?,
            a2_in: binio::read_complex(&mut r, n)?,
            b_in: binio::read_complex(&mut r, n)?,
        })
    } else {
        None
    };
    Ok(Trajectory { a1, a2, b, inputs, dt, seed, realization, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OpticalMode, SystemParams, HBAR, K_B};
    use std::f64::consts::PI;

    /// Dimensionless-scale system: omega_m = 1 rad/s.
    fn toy(g: f64, gamma: f64, kappa: f64, n_th: f64, n_p: f64) -> SystemParams {
        SystemParams {
            omega_m: 1.0,
            gamma_m: gamma,
            kappa,
            modes: [OpticalMode::probe(g, -0.2), OpticalMode::damper(0.0, -1.0)],
            t_bath: n_th * HBAR / K_B,
            n_p,
            lo_omega: 0.0,
            lo_theta: 0.0,
        }
    }

    fn mean_sq(xs: &[Complex64]) -> f64 {
        xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn no_noise_and_zero_start_gives_zero_trajectory() {
        let p = toy(0.05, 0.05, 0.5, 0.0, 0.0);
        let mut cfg = SimConfig::new(0.05, 2000, 1, 7);
        cfg.zero_point = false;
        cfg.initial = InitialState::Zero;
        let t = simulate(&p, &cfg).unwrap();
        assert!(t.a1.iter().chain(&t.a2).chain(&t.b).all(|z| *z == Complex64::new(0.0, 0.0)));
        let out = output_field(&t, ModeRole::Probe).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn same_seed_reproduces_bit_identical_arrays() {
        let p = toy(0.05, 0.05, 0.5, 3.0, 1.0);
        let cfg = SimConfig::new(0.05, 500, 1, 99);
        let a = simulate_realization(&p, &cfg, 3).unwrap();
        let b = simulate_realization(&p, &cfg, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate_realization(&p, &cfg, 4).unwrap();
        assert_ne!(a.a1, c.a1);
    }

    #[test]
    fn step_limit_is_enforced() {
        let p = toy(0.0, 0.05, 0.5, 1.0, 0.0);
        let cfg = SimConfig::new(0.2, 10, 1, 0);
        assert!(matches!(simulate(&p, &cfg), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn duration_requirement() {
        let p = toy(0.0, 0.05, 0.5, 1.0, 0.0);
        let cfg = SimConfig::new(0.1, 100, 1, 0);
        assert!(matches!(cfg.validate(&p, 0.05), Err(Error::InvalidSimConfig(_))));
        let cfg = SimConfig::new(0.1, 10_000, 1, 0);
        assert!(cfg.validate(&p, 0.05).is_ok());
    }

    #[test]
    fn unstable_system_is_rejected() {
        let mut p = toy(0.0, 0.0, 0.5, 1.0, 0.0);
        p.modes[0] = OpticalMode::probe(0.4, 1.0);
        let cfg = SimConfig::new(0.05, 10, 1, 0);
        assert!(matches!(simulate(&p, &cfg), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn missing_inputs_error() {
        let p = toy(0.0, 0.05, 0.5, 1.0, 0.0);
        let mut cfg = SimConfig::new(0.05, 10, 1, 0);
        cfg.record_inputs = false;
        let t = simulate(&p, &cfg).unwrap();
        assert!(matches!(output_field(&t, ModeRole::Probe), Err(Error::MissingInputs)));
    }

    /// Stationary variance of the decoupled oscillator is n_th + 1/2; interval
    /// averaging reduces it by sinc^2(omega dt / 2) which is 1 - 2e-5 here.
    fn oscillator_variance(scheme: Scheme, dt: f64, realizations: u64) -> (f64, f64) {
        let n_th = 4.0;
        let p = toy(0.0, 0.1, 0.5, n_th, 0.0);
        let mut cfg = SimConfig::new(dt, (400.0 / dt) as usize, 1, 11);
        cfg.scheme = scheme;
        cfg.record_inputs = false;
        let integ = Integrator::new(&p, &cfg).unwrap();
        let means: Vec<f64> = (0..realizations).map(|r| mean_sq(&integ.run(r).b)).collect();
        mean_se(&means)
    }

    #[test]
    fn decoupled_oscillator_variance_is_n_th_plus_half() {
        let (m, se) = oscillator_variance(Scheme::Exact, 0.02, 24);
        assert!((m - 4.5).abs() < 3.0 * se, "mean {m} se {se}");
        assert!(se < 0.1 * 4.5);
    }

    #[test]
    fn halving_dt_changes_variance_less_than_standard_error() {
        let (m1, se1) = oscillator_variance(Scheme::Exact, 0.04, 16);
        let (m2, se2) = oscillator_variance(Scheme::Exact, 0.02, 16);
        let se = (se1 * se1 + se2 * se2).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "{m1} vs {m2} (se {se})");
    }

    #[test]
    fn euler_scheme_agrees_within_its_bias() {
        let (m, se) = oscillator_variance(Scheme::EulerMaruyama, 0.005, 16);
        // Euler inflates the variance by omega^2 dt / gamma = 5 %.
        assert!((m - 4.5).abs() < 0.07 * 4.5 + 3.0 * se, "mean {m}");
    }

    #[test]
    fn coherent_ring_down_decays_at_kappa() {
        let kappa = 0.5;
        let p = toy(0.0, 0.05, kappa, 0.0, 0.0);
        let mut cfg = SimConfig::new(0.05, 400, 1, 0);
        cfg.zero_point = false;
        cfg.initial = InitialState::Coherent {
            a1: Complex64::new(1.0, 0.5),
            a2: Complex64::new(0.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        };
        let t = simulate(&p, &cfg).unwrap();
        let out = output_field(&t, ModeRole::Probe).unwrap();
        for k in [10usize, 100, 300] {
            let ratio = out[k + 20].norm_sqr() / out[k].norm_sqr();
            let expect = (-kappa * 20.0 * cfg.dt).exp();
            assert!((ratio - expect).abs() < 1e-9, "{ratio} vs {expect}");
        }
        let first = out[0].norm_sqr();
        let exact = {
            let a0 = Complex64::new(1.0, 0.5);
            let lam = Complex64::new(-kappa / 2.0, -0.2);
            let avg = a0 * ((lam * cfg.dt).exp() - 1.0) / (lam * cfg.dt);
            (kappa.sqrt() * avg).norm_sqr()
        };
        assert!((first - exact).abs() < 1e-12);
    }

    #[test]
    fn empty_cavity_reflects_the_input() {
        let p = toy(0.0, 0.05, 1e-14, 1.0, 2.0);
        let cfg = SimConfig::new(0.05, 200, 1, 5);
        let t = simulate(&p, &cfg).unwrap();
        let inp = t.inputs.as_ref().unwrap();
        let out = output_field(&t, ModeRole::Probe).unwrap();
        for (o, i) in out.iter().zip(&inp.a1_in) {
            assert!((o + i).norm() < 1e-6 * i.norm().max(1.0));
        }
    }

    /// Output built from the driving noise decorrelates from the input only
    /// through the cavity response; fresh noise breaks the correlation.
    #[test]
    fn input_output_correlation_is_preserved() {
        let p = toy(0.0, 0.05, 0.5, 0.0, 0.0);
        let cfg = SimConfig::new(0.05, 40_000, 1, 21);
        let t = simulate(&p, &cfg).unwrap();
        let inp = t.inputs.as_ref().unwrap();
        let out = output_field(&t, ModeRole::Probe).unwrap();
        let corr = |x: &[Complex64], y: &[Complex64]| {
            let c: Complex64 = x.iter().zip(y).map(|(a, b)| a * b.conj()).sum();
            c.norm() / (mean_sq(x) * mean_sq(y)).sqrt() / x.len() as f64
        };
        let good = corr(&out, &inp.a1_in);

        let mut rng = realization_rng(1234, 0);
        let scale = (0.25 / cfg.dt).sqrt();
        let fresh: Vec<Complex64> = (0..t.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(scale * re, scale * im)
            })
            .collect();
        let sk = p.kappa.sqrt();
        let naive: Vec<Complex64> = t.a1.iter().zip(&fresh).map(|(a, n)| sk * a - n).collect();
        let bad = corr(&naive, &inp.a1_in);
        assert!(good > 0.9, "correlation {good}");
        assert!(bad < 0.05, "naive correlation {bad}");
    }

    /// Uncoupled vacuum cavity: the output is white with symmetric-ordered
    /// level 1/2 per unit bandwidth, i.e. E|a_out|^2 dt = 1/2 at all frequencies.
    #[test]
    fn uncoupled_output_is_white_at_half() {
        let p = toy(0.0, 0.05, 0.5, 0.0, 0.0);
        let cfg = SimConfig::new(0.05, 1 << 14, 1, 3);
        let integ = Integrator::new(&p, &cfg).unwrap();
        let mut low = Vec::new();
        let mut high = Vec::new();
        for r in 0..24 {
            let out = output_field(&integ.run(r), ModeRole::Probe).unwrap();
            let n = out.len();
            // DFT at two frequencies: DC and a quarter of Nyquist.
            for (target, bins) in [(&mut low, 0usize), (&mut high, n / 8)] {
                let w = 2.0 * PI * bins as f64 / n as f64;
                let s: Complex64 = out.iter().enumerate().map(|(k, z)| z * Complex64::from_polar(1.0, -w * k as f64)).sum();
                target.push(s.norm_sqr() * cfg.dt / n as f64);
            }
        }
        for xs in [&low, &high] {
            let (m, se) = mean_se(xs);
            assert!((m - 0.5).abs() < 3.0 * se, "level {m} se {se}");
        }
    }

    #[test]
    fn ensemble_mean_vanishes() {
        let p = toy(0.05, 0.05, 0.5, 3.0, 1.0);
        let cfg = SimConfig::new(0.05, 4000, 1, 8);
        let integ = Integrator::new(&p, &cfg).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        let r = 16;
        for i in 0..r {
            let t = integ.run(i);
            let m: Complex64 = t.b.iter().sum::<Complex64>() / t.len() as f64;
            acc += m;
            sq += m.norm_sqr();
        }
        let mean = acc / r as f64;
        let se = (sq / r as f64 / r as f64).sqrt();
        assert!(mean.norm() < 4.0 * se);
    }

    #[test]
    fn binary_dump_round_trips() {
        let p = toy(0.05, 0.05, 0.5, 3.0, 1.0);
        let cfg = SimConfig::new(0.05, 300, 1, 8);
        let t = simulate(&p, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        write_trajectory(&path, &t).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 64 + 6 * 300 * 16);
        assert_eq!(read_trajectory(&path).unwrap(), t);
    }
}
