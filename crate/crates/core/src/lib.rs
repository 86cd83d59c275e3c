//! Simulation toolkit for radiative wireless power transfer from physically
//! large antenna apertures.
//!
//! A transmit array that is large compared to the link distance operates in
//! its radiative near field, where beamforming focuses power at a point in
//! space rather than in a direction. This crate models that regime end to
//! end:
//!
//! - [`geometry`] — planar arrays, finite reflectors, and the image-source
//!   construction (mirror arrays, specular points, visibility).
//! - [`channel`] — per-antenna complex transmission coefficients for the
//!   line-of-sight path and single-bounce specular components, plus noisy
//!   channel-state estimates.
//! - [`beamforming`] — unit-norm transmit weight vectors: conjugate
//!   (maximum-ratio), plane-wave, spherical-wavefront, multipath-aware, and
//!   random, plus a wake-up beam sweep.
//! - [`fieldmetrics`] — power-density fields, near- and far-field array gain
//!   patterns, power gain, focal width, and received power.
//! - [`compliance`] — power-density exposure limits, receivable-power
//!   budgets, and compliance reports with EIRP.
//! - [`analysis`] — Monte-Carlo characterization of reciprocity beamforming
//!   under noisy channel knowledge.
//!
//! All math is generic over the scalar type via [`Scalar`]; the bundled
//! presets, the CLI, and the test suites use [`Real`] (`f64`).

pub mod analysis;
pub mod beamforming;
pub mod channel;
pub mod compliance;
pub mod error;
pub mod fieldmetrics;
pub mod geometry;
pub mod scalar;
pub mod seeding;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default scalar precision used by the presets and the CLI.
pub type Real = f64;

/// Complex sample at the default precision.
pub type Cplx = num_complex::Complex<Real>;

/// Power ratio to decibels.
pub fn db<T: Scalar>(ratio: T) -> T {
    scalar::real::<T>(10.0) * ratio.log10()
}

/// Decibels to power ratio.
pub fn from_db<T: Scalar>(decibels: T) -> T {
    scalar::real::<T>(10.0).powf(decibels / scalar::real::<T>(10.0))
}

/// Wavelength in meters for a carrier frequency in Hz.
pub fn wavelength<T: Scalar>(frequency_hz: T) -> Result<T> {
    if frequency_hz <= T::zero() {
        return Err(Error::NonpositiveFrequency);
    }
    Ok(scalar::real::<T>(SPEED_OF_LIGHT) / frequency_hz)
}
