//! Physical parameters of the two-optical-mode + one-mechanical-mode system,
//! derived rates, and the linearized drift matrix.
//!
//! All frequencies and rates are angular (rad/s). Conversion from Hz happens
//! only at the config boundary.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;

/// Index of each amplitude in the complex state vector `(a1, a1+, a2, a2+, b, b+)`.
pub const A1: usize = 0;
pub const A1_DAG: usize = 1;
pub const A2: usize = 2;
pub const A2_DAG: usize = 3;
pub const B: usize = 4;
pub const B_DAG: usize = 5;
pub const STATE_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRole {
    Probe,
    Damper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalMode {
    /// Linearized optomechanical coupling G (rad/s).
    pub g: f64,
    /// Detuning from the cavity resonance (rad/s).
    pub delta: f64,
    pub role: ModeRole,
}

impl OpticalMode {
    pub fn probe(g: f64, delta: f64) -> Self {
        OpticalMode { g, delta, role: ModeRole::Probe }
    }

    pub fn damper(g: f64, delta: f64) -> Self {
        OpticalMode { g, delta, role: ModeRole::Damper }
    }

    /// Anti-Stokes (cooling) and Stokes (heating) scattering rates at +/- omega_m.
    fn scattering_rates(&self, kappa: f64, omega_m: f64) -> (f64, f64) {
        let hk = 0.5 * kappa;
        let g2k = self.g * self.g * kappa;
        let cool = g2k / (hk * hk + (self.delta + omega_m).powi(2));
        let heat = g2k / (hk * hk + (self.delta - omega_m).powi(2));
        (cool, heat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_m: f64,
    /// Intrinsic mechanical damping; the amplitude decays at `gamma_m / 2`.
    pub gamma_m: f64,
    /// Cavity decay rate shared by both optical modes.
    pub kappa: f64,
    /// Probe first, damping beam second.
    pub modes: [OpticalMode; 2],
    /// Mechanical bath temperature (K).
    pub t_bath: f64,
    /// Optical bath occupancy.
    pub n_p: f64,
    /// Heterodyne beat frequency; zero means homodyne.
    pub lo_omega: f64,
    pub lo_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub gamma_opt: f64,
    pub gamma_total: f64,
    pub n_th: f64,
    pub n_bar: f64,
}

/// Mechanical thermal occupancy in the high-temperature limit, `k_B T / (hbar omega)`.
pub fn thermal_occupancy(t_bath: f64, omega_m: f64) -> f64 {
    K_B * t_bath / (HBAR * omega_m)
}

impl SystemParams {
    pub fn probe(&self) -> &OpticalMode {
        &self.modes[0]
    }

    pub fn damper(&self) -> &OpticalMode {
        &self.modes[1]
    }

    pub fn n_th(&self) -> f64 {
        thermal_occupancy(self.t_bath, self.omega_m)
    }

    /// Checks the hard invariants. Resolution-window violations are reported
    /// separately by [`SystemParams::resolution_warnings`].
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_m,
            self.gamma_m,
            self.kappa,
            self.t_bath,
            self.n_p,
            self.lo_omega,
            self.lo_theta,
            self.modes[0].g,
            self.modes[0].delta,
            self.modes[1].g,
            self.modes[1].delta,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        let checks = [
            (self.omega_m > 0.0, "omega_m must be > 0"),
            (self.kappa > 0.0, "kappa must be > 0"),
            (self.gamma_m >= 0.0, "gamma_m must be >= 0"),
            (self.n_p >= 0.0, "n_p must be >= 0"),
            (self.t_bath >= 0.0, "t_bath must be >= 0"),
            (self.lo_omega >= 0.0, "lo_omega must be >= 0"),
            (self.modes[0].g >= 0.0 && self.modes[1].g >= 0.0, "couplings must be >= 0"),
            (self.modes[0].role == ModeRole::Probe, "first mode must be the probe"),
            (self.modes[1].role == ModeRole::Damper, "second mode must be the damper"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg.into()));
            }
        }
        Ok(())
    }

    /// Warnings when the beat frequency sits outside `10 Gamma <= Omega <= omega_m / 5`.
    pub fn resolution_warnings(&self, rates: &DerivedRates) -> Vec<String> {
        let mut out = Vec::new();
        if self.lo_omega == 0.0 {
            return out;
        }
        if self.lo_omega < 10.0 * rates.gamma_total {
            out.push(format!(
                "lo_omega/2pi = {:.4e} Hz is below 10 Gamma/2pi = {:.4e} Hz",
                self.lo_omega / (2.0 * PI),
                10.0 * rates.gamma_total / (2.0 * PI)
            ));
        }
        if self.omega_m < 5.0 * self.lo_omega {
            out.push(format!(
                "lo_omega/2pi = {:.4e} Hz exceeds omega_m/(5 * 2pi) = {:.4e} Hz",
                self.lo_omega / (2.0 * PI),
                self.omega_m / (10.0 * PI)
            ));
        }
        out
    }
}

/// Optical damping, total linewidth, bath occupancy and the detailed-balance
/// steady-state phonon number.
pub fn derived_rates(params: &SystemParams) -> Result<DerivedRates> {
    params.validate()?;
    let drift = drift_matrix(params)?;
    let max_re = drift.max_real_part();
    if max_re >= 0.0 {
        return Err(Error::UnstableSystem { max_real_part: max_re });
    }
    Ok(rates_unchecked(params))
}

pub(crate) fn rates_unchecked(params: &SystemParams) -> DerivedRates {
    let n_th = params.n_th();
    let mut gamma_opt = 0.0;
    let mut heating = params.gamma_m * n_th;
    for mode in &params.modes {
        let (cool, heat) = mode.scattering_rates(params.kappa, params.omega_m);
        gamma_opt += cool - heat;
        heating += heat * (params.n_p + 1.0) + cool * params.n_p;
    }
    let gamma_total = params.gamma_m + gamma_opt;
    let n_bar = if gamma_total > 0.0 { heating / gamma_total } else { f64::INFINITY };
    DerivedRates { gamma_opt, gamma_total, n_th, n_bar }
}

/// Linear drift of the complex amplitudes `(a1, a1+, a2, a2+, b, b+)` and the
/// input-noise coupling of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    pub matrix: DMatrix<Complex64>,
    pub noise_coupling: [f64; STATE_DIM],
}

pub fn drift_matrix(params: &SystemParams) -> Result<DriftMatrix> {
    params.validate()?;
    let i = Complex64::i();
    let mut m = DMatrix::<Complex64>::zeros(STATE_DIM, STATE_DIM);
    let half_k = 0.5 * params.kappa;
    for (j, mode) in params.modes.iter().enumerate() {
        let (a, ad) = (2 * j, 2 * j + 1);
        m[(a, a)] = Complex64::new(-half_k, mode.delta);
        m[(ad, ad)] = Complex64::new(-half_k, -mode.delta);
        m[(a, B)] = i * mode.g;
        m[(a, B_DAG)] = i * mode.g;
        m[(ad, B)] = -i * mode.g;
        m[(ad, B_DAG)] = -i * mode.g;
        m[(B, a)] = i * mode.g;
        m[(B, ad)] = i * mode.g;
        m[(B_DAG, a)] = -i * mode.g;
        m[(B_DAG, ad)] = -i * mode.g;
    }
    m[(B, B)] = Complex64::new(-0.5 * params.gamma_m, -params.omega_m);
    m[(B_DAG, B_DAG)] = Complex64::new(-0.5 * params.gamma_m, params.omega_m);

    let sk = params.kappa.sqrt();
    let sg = params.gamma_m.sqrt();
    Ok(DriftMatrix { matrix: m, noise_coupling: [sk, sk, sk, sk, sg, sg] })
}

impl DriftMatrix {
    /// Drift in the real quadrature basis `(u1, v1, u2, v2, q, p)` with `a = u + i v`.
    pub fn to_real(&self) -> DMatrix<f64> {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let mut t = DMatrix::<Complex64>::zeros(STATE_DIM, STATE_DIM);
        let mut t_inv = DMatrix::<Complex64>::zeros(STATE_DIM, STATE_DIM);
        for k in 0..3 {
            let (r, c) = (2 * k, 2 * k + 1);
            t[(r, r)] = one;
            t[(r, c)] = i;
            t[(c, r)] = one;
            t[(c, c)] = -i;
            t_inv[(r, r)] = 0.5 * one;
            t_inv[(r, c)] = 0.5 * one;
            t_inv[(c, r)] = -0.5 * i;
            t_inv[(c, c)] = 0.5 * i;
        }
        let real = &t_inv * &self.matrix * &t;
        debug_assert!(real.iter().all(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs())));
        real.map(|z| z.re)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.to_real().complex_eigenvalues().iter().copied().collect()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_real_part() < 0.0
    }
}

/// Solves `A S + S A^T + Q = 0` for the stationary covariance of
/// `dX = A X dt + dW` with `E[dW dW^T] = Q dt`.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or(Error::UnstableSystem { max_real_part: 0.0 })?;
    let s = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&s + s.transpose()) * 0.5)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn damping_beam_optical_damping_is_of_order_2700_hz() {
        let mut p = cooled();
        p.modes[0].g = 0.0;
        let r = derived_rates(&p).unwrap();
        let f = r.gamma_opt / (2.0 * PI);
        assert!((f - 2700.0).abs() <= 0.25 * 2700.0, "gamma_opt/2pi = {f}");
    }

    #[test]
    fn zero_coupling_gives_intrinsic_damping() {
        let mut p = cooled();
        p.modes[0].g = 0.0;
        p.modes[1].g = 0.0;
        let r = derived_rates(&p).unwrap();
        assert_eq!(r.gamma_opt, 0.0);
        assert_eq!(r.gamma_total, p.gamma_m);
    }

    #[test]
    fn thermal_occupancy_at_4_6_kelvin() {
        let n = thermal_occupancy(4.6, hz(1.53e6));
        assert_relative_eq!(n, 6.26e4, max_relative = 2e-3);
    }

    #[test]
    fn zero_coupling_is_block_diagonal() {
        let d = drift_matrix(&uncoupled(0.0)).unwrap();
        for r in 0..4 {
            for c in 4..6 {
                assert_eq!(d.matrix[(r, c)], Complex64::new(0.0, 0.0));
                assert_eq!(d.matrix[(c, r)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn cavity_diagonal_is_exact() {
        let p = cooled();
        let d = drift_matrix(&p).unwrap();
        assert_eq!(d.matrix[(A1, A1)], Complex64::new(-0.5 * p.kappa, p.modes[0].delta));
    }

    #[test]
    fn cooled_preset_is_stable_and_damping_matches_eigenvalues() {
        let p = cooled();
        let d = drift_matrix(&p).unwrap();
        assert!(d.max_real_part() < 0.0);
        // the mechanical pair sits near -i omega_m with real part -Gamma/2
        let r = derived_rates(&p).unwrap();
        let mech = d
            .eigenvalues()
            .into_iter()
            .min_by(|x, y| (x.im.abs() - p.omega_m).abs().total_cmp(&(y.im.abs() - p.omega_m).abs()))
            .unwrap();
        assert_relative_eq!(-2.0 * mech.re, r.gamma_total, max_relative = 0.05);
    }

    #[test]
    fn detailed_balance_occupancy_of_cooled_preset() {
        let r = derived_rates(&cooled()).unwrap();
        assert!(r.n_bar > 0.6 && r.n_bar < 1.0, "n_bar = {}", r.n_bar);
    }

    #[test]
    fn lyapunov_matches_scalar_ou() {
        let a = DMatrix::from_element(1, 1, -3.0);
        let q = DMatrix::from_element(1, 1, 2.0);
        let s = lyapunov(&a, &q).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.0 / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_negative_occupancy() {
        let mut p = cooled();
        p.n_p = -1.0;
        assert!(matches!(derived_rates(&p), Err(Error::InvalidParams(_))));
    }

    proptest! {
        #[test]
        fn rates_ignore_theta(theta in -10.0f64..10.0) {
            let mut p = cooled();
            p.lo_theta = theta;
            let r1 = derived_rates(&p).unwrap();
            p.lo_theta = -theta;
            let r2 = derived_rates(&p).unwrap();
            prop_assert_eq!(r1, r2);
        }

        #[test]
        fn dagger_rows_are_conjugates(g1 in 0.0f64..1e6, g2 in 0.0f64..1e6, d1 in -1e7f64..1e7) {
            let mut p = cooled();
            p.modes[0].g = g1;
            p.modes[1].g = g2;
            p.modes[0].delta = d1;
            let m = drift_matrix(&p).unwrap().matrix;
            let pair = |k: usize| k ^ 1;
            for r in [A1, A2, B] {
                for c in 0..STATE_DIM {
                    prop_assert_eq!(m[(pair(r), pair(c))], m[(r, c)].conj());
                }
            }
        }

        #[test]
        fn uncoupled_damped_system_is_stable(delta in -1e8f64..1e8, gm in 1e-3f64..1e4) {
            let mut p = cooled();
            p.modes[0].g = 0.0;
            p.modes[1].g = 0.0;
            p.modes[0].delta = delta;
            p.modes[1].delta = -delta;
            p.gamma_m = gm;
            prop_assert!(drift_matrix(&p).unwrap().is_stable());
        }
    }
}
