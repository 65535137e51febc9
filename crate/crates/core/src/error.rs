use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconsistent radio map: {0}")]
    InconsistentMap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no feasible channel for zone {zone}")]
    AllocationInfeasible { zone: u32 },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid sounding period {period_s} s (transmit duration is {tx_duration_s} s)")]
    InvalidPeriod { period_s: f64, tx_duration_s: f64 },

    #[error("localization efficiency undefined for mean error {mean_error} m and energy {energy} J")]
    UndefinedEfficiency { mean_error: f64, energy: f64 },

    #[error("invalid duration: {0}")]
    InvalidDuration(f64),

    #[error("position ({x}, {y}) is outside zone {zone}")]
    OutOfZone { zone: u32, x: f64, y: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invariant violated at {event}: {detail}")]
    InvariantViolation { event: String, detail: String },

    #[error("config error at `{path}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        path: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
