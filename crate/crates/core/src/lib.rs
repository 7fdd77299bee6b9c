//! Simulation and analysis toolkit for a three-grating Mach-Zehnder atom
//! interferometer that uses Bragg diffraction on laser standing waves.
//!
//! The crate is organized along the physical pipeline:
//!
//! * [`species`], [`beam`], [`geometry`] — atomic data, supersonic-beam
//!   sampling and the two-slit collimation geometry;
//! * [`bragg`] — diffraction of one atom by one standing wave, either as a
//!   closed-form two-level Rabi model or as a numerically integrated
//!   momentum-ladder model;
//! * [`interferometer`] — path enumeration through the three gratings,
//!   Monte Carlo fringe synthesis and diffraction profiles;
//! * [`noise`] — detector efficiency, Poisson counting, vibration phase noise;
//! * [`analysis`] — fringe fitting, contrast, figure of merit and
//!   phase-sensitivity estimators;
//! * [`tuning`] — parameter scans and derivative-free alignment optimization;
//! * [`config`] — a TOML-backed run configuration tying everything together.

pub mod analysis;
pub mod beam;
pub mod bragg;
pub mod config;
pub mod constants;
pub mod error;
pub mod geometry;
pub mod interferometer;
pub mod kinematics;
pub mod noise;
pub mod species;
pub mod tuning;

pub use error::{Error, Result};
