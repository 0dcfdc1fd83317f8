use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unphysical correction: log argument {argument} is not positive")]
    UnphysicalCorrection { argument: f64 },

    #[error("below threshold: pump ratio sigma = {sigma} must exceed 1")]
    BelowThreshold { sigma: f64 },

    #[error("step size {dt:e} s exceeds stability limit {limit:e} s")]
    StepSize { dt: f64, limit: f64 },

    #[error("unknown mode id `{0}`")]
    UnknownMode(String),

    #[error("servo unstable with kp = {kp}, ki = {ki}: {reason}")]
    ServoUnstable { kp: f64, ki: f64, reason: String },

    #[error("insufficient samples: trace lasts {have_s:e} s, need at least {need_s:e} s")]
    InsufficientSamples { have_s: f64, need_s: f64 },

    #[error("frequency {freq_hz} Hz outside analysis range [0, {nyquist_hz}] Hz")]
    OutOfRange { freq_hz: f64, nyquist_hz: f64 },

    #[error("frequency grids differ")]
    GridMismatch,

    #[error("trace length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("heterodyne leakage: LO offset {lo_hz} Hz vs beam offset {beam_hz} Hz")]
    HeterodyneLeakage { lo_hz: f64, beam_hz: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Config problems are reported separately from runtime failures by the CLI.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::ConfigParse(_) | Error::Validation(_))
    }
}
