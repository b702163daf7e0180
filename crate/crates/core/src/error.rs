use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {z} lies within {distance:e} of the Gamma pole at {pole}")]
    GammaPole { z: String, pole: i64, distance: f64 },

    #[error("hypergeometric parameter c = {c} is a nonpositive integer")]
    HypergeometricParameterPole { c: String },

    #[error("hypergeometric series did not converge after {terms} terms (x = {x})")]
    NoConvergence { terms: usize, x: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("coupling {coupling} is at or below the threshold {threshold}")]
    CouplingBelowThreshold { coupling: f64, threshold: f64 },

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("connection coefficient is degenerate: numerator Gamma argument {argument} is a pole")]
    DegenerateConnection { argument: String },

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("CFL violation: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("sampler {id} leaves the reflection-clean window: {detail}")]
    SamplerOutsideWindow { id: String, detail: String },

    #[error("invalid grid or initial data: {0}")]
    InvalidSetup(String),

    #[error("non-finite field value at step {step} (t = {t})")]
    Instability { step: usize, t: f64 },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("trajectory {id} is labeled {label} but no matching rate is available")]
    LabelMismatch { id: String, label: String },
}

pub type Result<T> = std::result::Result<T, Error>;
