use thiserror::Error;

/// Errors raised by the physics, model and optimization layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrsError {
    #[error("degenerate resonance: |denominator| = {magnitude:e} ohm is below {epsilon:e}")]
    DegenerateResonance { magnitude: f64, epsilon: f64 },

    #[error("phase {0} rad is outside [-pi, pi)")]
    PhaseDomain(f64),

    #[error("insufficient samples for fitting: {0}")]
    InsufficientSamples(String),

    #[error("distance {0} m is below the 1 m reference distance")]
    SubReferenceDistance(f64),

    #[error("effective channel is zero")]
    ZeroChannel,

    #[error("element index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, IrsError>;

pub(crate) fn invalid(msg: impl Into<String>) -> IrsError {
    IrsError::InvalidParameter(msg.into())
}
