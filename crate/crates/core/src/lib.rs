//! Heterodyne photocurrent simulation for a two-mode optomechanical cavity
//! and filtered-autocorrelation ("r-heterodyne") spectral recovery.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameters, derived rates and the linear drift matrix.
//! - [`analytic`]: frequency-domain noise spectra and their homodyne,
//!   heterodyne and filtered compositions.
//! - [`langevin`]: exact-discretization stochastic simulator.
//! - [`detect`]: heterodyne current synthesis.
//! - [`spectra`]: PSD estimators, filters, phase search, ensemble statistics.
//! - [`harness`]: config files, presets and end-to-end pipelines.

pub mod analytic;
mod binio;
pub mod detect;
pub mod error;
pub mod harness;
pub mod langevin;
pub mod model;
pub mod par;
pub mod spectra;

pub use error::{Error, Result};
pub use par::Exec;
