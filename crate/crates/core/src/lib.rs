//! Simulation toolkit for photon pairs generated by spontaneous four-wave
//! mixing in a photonic crystal fiber and their two-photon interference in
//! an unbalanced Mach-Zehnder interferometer.
//!
//! The pipeline runs in five stages, one module each:
//!
//! * [`dispersion`] reconstructs the propagation constant `k(ω)` from a
//!   tabulated group-velocity dispersion curve.
//! * [`phasematch`] evaluates the phase mismatch, the sinc² gain factor and
//!   the pair rate, finds trunk and branch phase-matching solutions and
//!   builds spectral maps over pump wavelength.
//! * [`spectrum`] separates the pair (∝ P²) and background (∝ P) parts of
//!   measured output spectra taken at two or more pump powers.
//! * [`interferometer`] holds the path-amplitude algebra, the closed-form
//!   and spectrally averaged coincidence fringes and visibility fitting.
//! * [`mcsim`] is an event-level Monte Carlo of emission, detection and
//!   gated coincidence counting.
//!
//! [`cli`] ties the stages together behind the `pcfpair` binary.

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod interferometer;
pub mod io;
pub mod mcsim;
pub mod phasematch;
pub mod roots;
pub mod spectrum;
pub mod spline;
pub mod svg;
pub mod units;

pub use error::{Error, Result};
