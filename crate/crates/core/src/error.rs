//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by calibration, signal conditioning, control, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A sensor sample was non-finite or out of physical range.
    #[error("signal fault: {0}")]
    SignalFault(String),

    /// A stride had zero or negative duration.
    #[error("degenerate stride: t_start={t_start}, t_end={t_end}")]
    DegenerateStride { t_start: f64, t_end: f64 },

    /// Phase variable is undefined at the portrait origin.
    #[error("undefined phase: portrait input is at the origin")]
    UndefinedPhase,

    /// Not enough complete strides for the requested calibration.
    #[error("insufficient strides: need {required}, have {available}")]
    InsufficientStrides { required: usize, available: usize },

    /// Calibration input spans collapsed (e.g. zero velocity range).
    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    /// Calibration produced an unusable result.
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    /// An operation needed a calibration value that is absent or unset.
    #[error("calibration missing: {0}")]
    CalibrationMissing(String),

    /// Volitional calibration data did not cover a required condition.
    #[error("insufficient calibration data: {0}")]
    InsufficientCalibrationData(String),

    /// A calibration violated its own invariants.
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    /// Equilibrium angle exceeded the prosthesis range of motion.
    #[error("range-of-motion violation: |theta_eq|={theta_eq} > theta_max={theta_max}")]
    RomViolation { theta_eq: f64, theta_max: f64 },

    /// A file did not match its documented schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
