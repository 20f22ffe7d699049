use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hbar {hbar} is too small for this grid (minimum admissible hbar is {min_hbar})")]
    HbarTooSmall { hbar: f64, min_hbar: f64 },

    #[error("symbol has no registered complex extension")]
    NoComplexExtension,

    #[error("sigma {sigma} exceeds the declared analyticity radius {radius}")]
    OutsideAnalyticityRadius { sigma: f64, radius: f64 },

    #[error("step size underflow at node {node} (t = {time})")]
    StepUnderflow { node: usize, time: f64 },

    #[error("interpolation failure at node {node}: image ({x}, {xi}) leaves the padded box")]
    Interpolation { node: usize, x: f64, xi: f64 },

    #[error("order {order} out of range ({reason})")]
    OrderOutOfRange { order: usize, reason: String },

    #[error("strip exhausted: {0}")]
    StripExhausted(String),

    #[error("iterated logarithm chain collapsed at level {level} (value {value})")]
    ChainCollapse { level: usize, value: f64 },

    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("infeasible calibration: {0}")]
    InfeasibleCalibration(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
