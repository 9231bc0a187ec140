use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown symbol family `{0}`")]
    UnknownFamily(String),

    #[error("symbol does not decay at the grid boundary (relative boundary mass {mass:.3e} > {limit:.1e})")]
    BoundaryDecay { mass: f64, limit: f64 },

    #[error("operator mismatch: {0}")]
    Mismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("trace weight check failed: c*Tr(lambda(f)) = {got:.6} but f(0) = {want:.6}")]
    TraceWeight { got: f64, want: f64 },

    #[error("parameter gate: {0}")]
    ParameterGate(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
