//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by geometry, channel, beamforming, field, and analysis
/// routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    /// Specular geometry requires both endpoints strictly on the same side of
    /// the reflector plane.
    #[error("endpoints do not lie strictly on the same side of the reflector plane")]
    SameSideViolation,
    #[error("propagation distance must be positive")]
    ZeroDistance,
    #[error("unknown multipath component index {0}")]
    UnknownComponent(u32),
    #[error("component set is empty")]
    EmptyComponents,
    #[error("channel vector has zero norm")]
    ZeroChannel,
    #[error("channel SNR must be positive")]
    NonpositiveSnr,
    /// The device coincides with the array center, so no steering direction
    /// exists.
    #[error("device direction is degenerate")]
    DegenerateDirection,
    #[error("field point coincides with an antenna or mirror-antenna position")]
    SingularPoint,
    #[error("frequency must be positive")]
    NonpositiveFrequency,
    #[error("grid contains no valid samples")]
    EmptyGrid,
    #[error("trial count must be positive")]
    ZeroTrials,
    #[error("sample list is empty")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;
