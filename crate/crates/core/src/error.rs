use thiserror::Error;

/// Errors produced by the transport library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density exponent {value} at point {index} exceeds the overflow bound {bound}")]
    DensityOverflow { index: usize, value: f64, bound: f64 },

    #[error("grid with {points} points exceeds the capacity limit of {limit}")]
    Capacity { points: u128, limit: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("kernel backend failure: {0}")]
    BackendFailure(String),

    #[error("bandwidth {required} exceeds the available bandwidth {available}")]
    Bandwidth { required: usize, available: usize },

    #[error("argument {0} outside the domain [-1, 1]")]
    Domain(f64),

    #[error("quasi-convexity lost at t = {t}: min eigenvalue of I + Hessian is {min_eig}")]
    QuasiConvexityLost { t: f64, min_eig: f64, state: Vec<f64> },

    #[error("time step {dt} at t = {t} exceeds the explicit stability bound {bound}")]
    Unstable { t: f64, dt: f64, bound: f64, state: Vec<f64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate critical point: {0}")]
    DegenerateCriticalPoint(String),

    #[error("nonpositive entry {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("potential support mismatch: {left} vs {right} points")]
    SupportMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
