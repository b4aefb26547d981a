//! Doppler-signature cloaking with time-modulated metasurfaces.
//!
//! The crate follows the signal from the scatterer to the victim radar's
//! detector:
//!
//! ```text
//! circuit_model / metasurface   phase response of the varactor-loaded scatterer (PhaseMap)
//!          │
//! modulation                    varactor C(V), calibration by inversion, sawtooth bias waveform
//!          │
//! scene                         slow-time SFCW echoes of moving, optionally coated targets
//!          │
//! dsp                           decimation, two-pulse MTI, Doppler FFT, velocity estimate
//!          │
//! cloak                         modulation-frequency planning and concealment evaluation
//! ```
//!
//! Sign conventions used throughout:
//!
//! * A scatterer's phase shift `Δφ` grows with varactor capacitance
//!   (0 → π for a single dipole, 0 → ~2π for the array).
//! * Radial velocity `v` is negative for a target moving away from the radar.
//!   The echo phase evolves as `φ_D(t) = −4π f_c (r0 + v t) / c`, so a receding
//!   target produces a rising phase and a positive Doppler line.
//! * A positive modulation frequency `f_m` produces a rising metasurface phase.
//! * Velocity is recovered from a Doppler frequency as `v = −f c / (2 f_c)`.
// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit_model;
pub mod cli;
pub mod cloak;
pub mod config;
pub mod dsp;
mod error;
pub mod interp;
pub mod metasurface;
pub mod modulation;
pub mod phase_map;
pub mod scene;

pub use error::{Error, Result};

/// Speed of light used by the radar model, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Impedance of free space, ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;
