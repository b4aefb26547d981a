use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no rectifying capacitance at {frequency} Hz")]
    NoRectifyingCapacitance { frequency: f64 },

    #[error("edge outside map: threshold {threshold} rad never reached at {frequency} Hz")]
    EdgeOutsideMap { frequency: f64, threshold: f64 },

    #[error("frequency {requested} Hz is more than half a grid step from the nearest row ({nearest} Hz)")]
    FrequencyOffGrid { requested: f64, nearest: f64 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("calibration error: phase not strictly increasing between {from} F and {to} F")]
    NonMonotone { from: f64, to: f64 },

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("expected Doppler {expected} Hz exceeds the post-decimation Nyquist frequency {nyquist} Hz")]
    DopplerAboveNyquist { expected: f64, nyquist: f64 },

    #[error("no detection: spectrum is identically zero")]
    NoDetection,

    #[error("waveform covers {covered} s but the scene needs {needed} s")]
    WaveformTooShort { covered: f64, needed: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("optimizer failed: {0}")]
    Fit(String),

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
