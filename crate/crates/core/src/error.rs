//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the history, drift, integration and verification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step size must be positive and finite, got {got}")]
    InvalidStep { got: f64 },

    #[error("grid mismatch: {context} (expected step {expected}, got {got})")]
    GridMismatch {
        context: &'static str,
        expected: f64,
        got: f64,
    },

    #[error("kernel rate must be positive, got {got}")]
    InvalidRate { got: f64 },

    #[error("tail rate {tail_rate} must be strictly below kernel rate {kernel_rate}")]
    TailRateTooLarge { tail_rate: f64, kernel_rate: f64 },

    #[error("no kernel accumulator registered for rate {rate} and transform {transform}")]
    UnregisteredKernel { rate: f64, transform: String },

    #[error("kernel accumulators must be registered before samples are pushed")]
    RegisterAfterPush,

    #[error("transform {transform} is not scalar valued in dimension {dim}")]
    NonScalarTransform { transform: String, dim: usize },

    #[error("closed-form kernel integral unavailable: {reason}")]
    NoClosedForm { reason: String },

    #[error("window must contain at least one sample")]
    EmptyWindow,

    #[error("sample contains a non-finite component")]
    NonFiniteSample,

    #[error("invalid drift parameter {name}: {reason}")]
    InvalidDrift { name: &'static str, reason: String },

    #[error("drift evaluation produced a non-finite value at node {node}")]
    NonFiniteDrift { node: usize },

    #[error("trajectory exceeded the blow-up threshold {threshold:e} at node {node}")]
    BlowUp { node: usize, threshold: f64 },

    #[error("horizon {horizon} is not an integer multiple of dt {dt}")]
    HorizonNotOnGrid { horizon: f64, dt: f64 },

    #[error("shift offset {offset} is not an integer multiple of the grid step {dt}")]
    ShiftNotOnGrid { offset: f64, dt: f64 },

    #[error("shifted record does not cover time 0, cannot re-anchor the noise path")]
    ShiftLeavesAnchor,

    #[error("splice endpoint mismatch: past ends at {past:?}, future starts at {future:?}")]
    SpliceEndpointMismatch { past: Vec<f64>, future: Vec<f64> },

    #[error("empty sample set: {context}")]
    EmptySamples { context: &'static str },

    #[error("estimator produced no admissible ratio (all denominators vanished)")]
    DegenerateEstimate,

    #[error("{context}: {reason}")]
    Invalid { context: &'static str, reason: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
