use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate capacitance network: {0}")]
    DegenerateNetwork(String),

    #[error("ill-conditioned cross-talk compensation: {0}")]
    IllConditioned(String),

    #[error("{n} qubits exceeds the configured maximum of {max}")]
    DimensionOverflow { n: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time resolution: {0}")]
    Resolution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("unreachable gate: {0}")]
    UnreachableGate(String),

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("current {current:.6e} A exceeds segment capacity {capacity:.6e} A")]
    CapacityExceeded { current: f64, capacity: f64 },

    #[error("chain saturates before reaching V_D = {v_d} V (binding segment {segment})")]
    Saturation { v_d: f64, segment: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("schedule parse error at line {line}: {msg}")]
    Schedule { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
