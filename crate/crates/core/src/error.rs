use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shift {shift} is not a multiple of the grid step {dt}")]
    NonGridShift { shift: f64, dt: f64 },
    #[error("path window [{t_min}, {t_max}] does not contain 0")]
    WindowExcludesZero { t_min: f64, t_max: f64 },
    #[error("past path is not stopped")]
    PastNotStopped,
    #[error("path kind mismatch: {0}")]
    KindMismatch(String),
    #[error("paths live on different grids ({0} vs {1})")]
    GridMismatch(f64, f64),
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("path is not stopped")]
    NotStopped,
    #[error("|t| = {t} must be smaller than delta = {delta}")]
    OutOfRange { t: f64, delta: f64 },
    #[error("observable is outside the D0 algebra: {0}")]
    NotInD0Domain(String),
    #[error("state left the finite range at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("observable reaches t = {needed}, beyond the simulation horizon {horizon}")]
    HorizonExceeded { needed: f64, horizon: f64 },
    #[error("observable is not past-determined (window {0})")]
    NotPastDetermined(String),
    #[error("paths disagree at time 0: {0:?} vs {1:?}")]
    PathsDisagreeAtZero(Vec<f64>, Vec<f64>),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("check {index} ({name}): {source}")]
    Check { index: usize, name: String, source: Box<Error> },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
