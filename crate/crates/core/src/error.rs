use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("degenerate edge at vertex {0}")]
    DegenerateEdge(usize),
    #[error("nonconvex curve")]
    NonconvexCurve,
    #[error("timestep too large: dt = {dt}, limit = {limit}")]
    TimestepTooLarge { dt: f64, limit: f64 },
    #[error("input curve not δ̂-close: {0}")]
    NotDeltaClose(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid generating curve: {0}")]
    InvalidGeneratingCurve(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("degenerate metric at ({0}, {1})")]
    DegenerateMetric(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("homotopy/curve mismatch: {0}")]
    Mismatch(String),
    #[error("surgery precondition failed: {0}")]
    Surgery(String),
    #[error("singular without neck at t = {0}")]
    SingularWithoutNeck(f64),
    #[error("no neck found at blowup: {0}")]
    NoNeckAtBlowup(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
