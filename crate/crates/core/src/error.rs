//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its allowed range.
    #[error("parameter `{name}` = {value} out of range ({requirement})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A state has the wrong photon count for the requested operation.
    #[error("expected a {expected}-photon state, got {got} photons")]
    PhotonCount { expected: usize, got: usize },

    /// A state vector is not normalized (and not flagged as a weighted branch).
    #[error("state vector has squared norm {norm_sq}, expected 1 within {tol}")]
    NotNormalized { norm_sq: f64, tol: f64 },

    /// Measurement settings assign two settings to the same party.
    #[error("duplicate measurement setting for party {party}")]
    DuplicateParty { party: &'static str },

    /// A setting label does not belong to the requested party.
    #[error("setting {label} is not available to party {party}")]
    InvalidSetting {
        party: &'static str,
        label: &'static str,
    },

    /// A storage-loop control schedule that cannot run the requested trace.
    #[error("malformed storage schedule: {reason}")]
    MalformedSchedule { reason: String },

    /// Root finding found no sign change over the search interval.
    #[error("no threshold: {quantity} does not change sign over [{lo}, {hi}]")]
    NoThreshold { quantity: &'static str, lo: f64, hi: f64 },

    /// A target value cannot be reached anywhere in the search domain.
    #[error("no solution: {reason}")]
    NoSolution { reason: String },

    /// An estimator was asked to run on statistics it cannot support.
    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },

    /// A secrecy provider was evaluated outside its domain.
    #[error("provider `{provider}` not applicable: {reason}")]
    ProviderDomain {
        provider: &'static str,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
